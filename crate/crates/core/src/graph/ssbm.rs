use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Edge, GraphError, Sign, SignedDiGraph};
use crate::rng::seeded;

/// Signed stochastic block model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsbmParams {
    pub nodes_per_cluster: usize,
    pub n_clusters: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub flip_prob: f64,
    pub directed: bool,
    pub seed: u64,
}

impl Default for SsbmParams {
    fn default() -> Self {
        Self {
            nodes_per_cluster: 500,
            n_clusters: 2,
            p_intra: 0.02,
            p_inter: 0.01,
            flip_prob: 0.0,
            directed: false,
            seed: 0,
        }
    }
}

impl SsbmParams {
    pub fn validate(&self) -> Result<(), GraphError> {
        for (name, p) in [
            ("p_intra", self.p_intra),
            ("p_inter", self.p_inter),
            ("flip_prob", self.flip_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(GraphError::InvalidParameter(format!(
                    "{name} = {p} is not a probability"
                )));
            }
        }
        if self.nodes_per_cluster == 0 {
            return Err(GraphError::InvalidParameter(
                "nodes_per_cluster must be at least 1".into(),
            ));
        }
        if self.n_clusters == 0 {
            return Err(GraphError::InvalidParameter(
                "n_clusters must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes_per_cluster * self.n_clusters
    }
}

/// Samples a planted-partition signed graph and its cluster labels.
///
/// Node `i` belongs to cluster `i / nodes_per_cluster`. Each candidate pair
/// (ordered when directed) is kept with `p_intra` as a positive edge or with
/// `p_inter` as a negative one, then its sign is flipped with `flip_prob`.
pub fn ssbm_generate(p: &SsbmParams) -> Result<(SignedDiGraph, Vec<usize>), GraphError> {
    p.validate()?;
    let n = p.n_nodes();
    let labels: Vec<usize> = (0..n).map(|i| i / p.nodes_per_cluster).collect();
    let mut rng = seeded(p.seed);
    let mut edges = Vec::new();
    for i in 0..n {
        let start = if p.directed { 0 } else { i + 1 };
        for j in start..n {
            if i == j {
                continue;
            }
            let same = labels[i] == labels[j];
            let prob = if same { p.p_intra } else { p.p_inter };
            if rng.random::<f64>() < prob {
                let mut sign = if same { Sign::Positive } else { Sign::Negative };
                if p.flip_prob > 0.0 && rng.random::<f64>() < p.flip_prob {
                    sign = sign.flipped();
                }
                edges.push(Edge::new(i, j, sign));
            }
        }
    }
    Ok((SignedDiGraph::new(n, p.directed, edges)?, labels))
}
