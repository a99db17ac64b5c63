//! Signed, optionally directed graphs.
//!
//! A [`SignedDiGraph`] stores each edge once with a `±1` sign. Undirected
//! graphs keep one record per unordered pair and every query treats it
//! symmetrically. Self-loops are never stored: propagation operators add
//! the self term themselves.

mod io;
mod ssbm;

use std::collections::{HashMap, HashSet};

use ndarray::Array1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::CsrMatrix;

pub use io::{load_edge_list, write_edge_list, LoadedEdgeList};
pub use ssbm::{ssbm_generate, SsbmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }

    /// Sign of a non-zero real; `None` for zero or NaN.
    pub fn of(x: f64) -> Option<Sign> {
        if x > 0.0 {
            Some(Sign::Positive)
        } else if x < 0.0 {
            Some(Sign::Negative)
        } else {
            None
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub sign: Sign,
}

impl Edge {
    pub fn new(src: usize, dst: usize, sign: Sign) -> Self {
        Self { src, dst, sign }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge ({src}, {dst}) references a node outside 0..{n_nodes}")]
    NodeOutOfRange {
        src: usize,
        dst: usize,
        n_nodes: usize,
    },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({src}, {dst})")]
    DuplicateEdge { src: usize, dst: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: zero-valued sign")]
    ZeroSign { line: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("node id table has {found} entries for {expected} nodes")]
    NodeIdCount { expected: usize, found: usize },
    #[error("duplicate node id {0:?}")]
    DuplicateNodeId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegreeMode {
    /// Row sums of `A`.
    Signed,
    /// Row sums of `|A|`.
    Absolute,
    /// Row sums of `|A_s|`, the symmetrized adjacency.
    AbsoluteSymmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector {
    pub values: Array1<f64>,
    pub mode: DegreeMode,
}

/// Immutable signed graph; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedDiGraph {
    n_nodes: usize,
    edges: Vec<Edge>,
    directed: bool,
    node_ids: Option<Vec<String>>,
}

impl SignedDiGraph {
    pub fn new(n_nodes: usize, directed: bool, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.src >= n_nodes || e.dst >= n_nodes {
                return Err(GraphError::NodeOutOfRange {
                    src: e.src,
                    dst: e.dst,
                    n_nodes,
                });
            }
            if e.src == e.dst {
                return Err(GraphError::SelfLoop(e.src));
            }
            let key = if directed {
                (e.src, e.dst)
            } else {
                (e.src.min(e.dst), e.src.max(e.dst))
            };
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge {
                    src: e.src,
                    dst: e.dst,
                });
            }
        }
        Ok(Self {
            n_nodes,
            edges,
            directed,
            node_ids: None,
        })
    }

    pub fn empty(n_nodes: usize, directed: bool) -> Self {
        Self {
            n_nodes,
            edges: Vec::new(),
            directed,
            node_ids: None,
        }
    }

    /// Convenience constructor from `(src, dst, ±1)` triples.
    pub fn from_signed_pairs(
        n_nodes: usize,
        directed: bool,
        pairs: &[(usize, usize, i8)],
    ) -> Result<Self, GraphError> {
        let edges = pairs
            .iter()
            .map(|&(s, d, v)| {
                let sign = Sign::of(v as f64).ok_or(GraphError::InvalidParameter(format!(
                    "sign of ({s}, {d}) is zero"
                )))?;
                Ok(Edge::new(s, d, sign))
            })
            .collect::<Result<Vec<_>, GraphError>>()?;
        Self::new(n_nodes, directed, edges)
    }

    /// Attaches external node ids, one per node index.
    pub fn with_node_ids(mut self, ids: Vec<String>) -> Result<Self, GraphError> {
        if ids.len() != self.n_nodes {
            return Err(GraphError::NodeIdCount {
                expected: self.n_nodes,
                found: ids.len(),
            });
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(GraphError::DuplicateNodeId(id.clone()));
            }
        }
        self.node_ids = Some(ids);
        Ok(self)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn node_ids(&self) -> Option<&[String]> {
        self.node_ids.as_deref()
    }

    /// External id of node `i`, falling back to its index.
    pub fn node_id(&self, i: usize) -> String {
        match &self.node_ids {
            Some(ids) => ids[i].clone(),
            None => i.to_string(),
        }
    }

    /// Map from external id to node index.
    pub fn node_index(&self) -> HashMap<String, usize> {
        (0..self.n_nodes).map(|i| (self.node_id(i), i)).collect()
    }

    pub fn count_signs(&self) -> (usize, usize) {
        let pos = self
            .edges
            .iter()
            .filter(|e| e.sign == Sign::Positive)
            .count();
        (pos, self.edges.len() - pos)
    }

    /// `A` as a sparse matrix; undirected edges fill both triangles.
    pub fn adjacency(&self) -> CsrMatrix {
        let mut trip = Vec::with_capacity(self.edges.len() * 2);
        for e in &self.edges {
            trip.push((e.src, e.dst, e.sign.value()));
            if !self.directed {
                trip.push((e.dst, e.src, e.sign.value()));
            }
        }
        CsrMatrix::from_triplets(self.n_nodes, self.n_nodes, trip)
            .expect("edges validated at construction")
    }

    /// `A_s(i,j) = ½(A(i,j) + A(j,i))`; equal to `A` for undirected graphs.
    /// Each unordered pair is evaluated once, so the result is exactly symmetric.
    pub fn symmetrize(&self) -> CsrMatrix {
        let mut pairs: HashMap<(usize, usize), f64> = HashMap::with_capacity(self.edges.len());
        for e in &self.edges {
            let key = (e.src.min(e.dst), e.src.max(e.dst));
            let contrib = if self.directed {
                0.5 * e.sign.value()
            } else {
                e.sign.value()
            };
            *pairs.entry(key).or_insert(0.0) += contrib;
        }
        let mut trip = Vec::with_capacity(pairs.len() * 2);
        for ((i, j), v) in pairs {
            trip.push((i, j, v));
            trip.push((j, i, v));
        }
        CsrMatrix::from_triplets(self.n_nodes, self.n_nodes, trip)
            .expect("edges validated at construction")
            .into_hermitian()
            .expect("symmetric by construction")
    }

    pub fn degrees(&self, mode: DegreeMode) -> DegreeVector {
        let m = match mode {
            DegreeMode::Signed | DegreeMode::Absolute => self.adjacency(),
            DegreeMode::AbsoluteSymmetric => self.symmetrize(),
        };
        let values = Array1::from_iter((0..self.n_nodes).map(|i| {
            m.row(i)
                .map(|(_, v)| {
                    if mode == DegreeMode::Signed {
                        v
                    } else {
                        v.abs()
                    }
                })
                .sum::<f64>()
        }));
        DegreeVector { values, mode }
    }

    /// Nodes without any incident edge.
    pub fn isolated_nodes(&self) -> Vec<usize> {
        let mut touched = vec![false; self.n_nodes];
        for e in &self.edges {
            touched[e.src] = true;
            touched[e.dst] = true;
        }
        (0..self.n_nodes).filter(|&i| !touched[i]).collect()
    }

    /// Nodes whose symmetrized absolute degree is zero. This includes nodes
    /// whose only incident pair carries conflicting reciprocal signs.
    pub fn zero_degree_nodes(&self) -> Vec<usize> {
        let d = self.degrees(DegreeMode::AbsoluteSymmetric);
        d.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Removes zero-degree nodes; returns the reduced graph and, for each new
    /// index, the original index.
    pub fn drop_isolated(&self) -> (SignedDiGraph, Vec<usize>) {
        let dead: HashSet<usize> = self.zero_degree_nodes().into_iter().collect();
        let kept: Vec<usize> = (0..self.n_nodes).filter(|i| !dead.contains(i)).collect();
        let mut remap = vec![usize::MAX; self.n_nodes];
        for (new, &old) in kept.iter().enumerate() {
            remap[old] = new;
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| remap[e.src] != usize::MAX && remap[e.dst] != usize::MAX)
            .map(|e| Edge::new(remap[e.src], remap[e.dst], e.sign))
            .collect();
        let node_ids = self
            .node_ids
            .as_ref()
            .map(|ids| kept.iter().map(|&i| ids[i].clone()).collect());
        let g = SignedDiGraph {
            n_nodes: kept.len(),
            edges,
            directed: self.directed,
            node_ids,
        };
        (g, kept)
    }

    /// Same node set, different edge list (used to build training graphs).
    pub fn with_edges(&self, edges: Vec<Edge>) -> Result<SignedDiGraph, GraphError> {
        let mut g = SignedDiGraph::new(self.n_nodes, self.directed, edges)?;
        g.node_ids = self.node_ids.clone();
        Ok(g)
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<SignedDiGraph, GraphError> {
        let mut check = perm.to_vec();
        check.sort_unstable();
        if check != (0..self.n_nodes).collect::<Vec<_>>() {
            return Err(GraphError::InvalidParameter(
                "not a permutation of the node set".into(),
            ));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge::new(perm[e.src], perm[e.dst], e.sign))
            .collect();
        let mut g = SignedDiGraph::new(self.n_nodes, self.directed, edges)?;
        if let Some(ids) = &self.node_ids {
            let mut new_ids = vec![String::new(); self.n_nodes];
            for (i, id) in ids.iter().enumerate() {
                new_ids[perm[i]] = id.clone();
            }
            g.node_ids = Some(new_ids);
        }
        Ok(g)
    }

    /// Whether `u` and `v` are joined by an edge in either direction.
    pub fn pair_set(&self) -> HashSet<(usize, usize)> {
        self.edges
            .iter()
            .map(|e| (e.src.min(e.dst), e.src.max(e.dst)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path() -> SignedDiGraph {
        SignedDiGraph::from_signed_pairs(3, false, &[(0, 1, 1), (1, 2, -1)]).unwrap()
    }

    #[test]
    fn construction_rejects_bad_edges() {
        assert!(matches!(
            SignedDiGraph::from_signed_pairs(2, true, &[(0, 2, 1)]),
            Err(GraphError::NodeOutOfRange { .. })
        ));
        assert!(matches!(
            SignedDiGraph::from_signed_pairs(2, true, &[(1, 1, 1)]),
            Err(GraphError::SelfLoop(1))
        ));
        assert!(matches!(
            SignedDiGraph::from_signed_pairs(2, true, &[(0, 1, 1), (0, 1, -1)]),
            Err(GraphError::DuplicateEdge { .. })
        ));
        // Reverse direction is a distinct edge only for directed graphs.
        assert!(SignedDiGraph::from_signed_pairs(2, true, &[(0, 1, 1), (1, 0, -1)]).is_ok());
        assert!(SignedDiGraph::from_signed_pairs(2, false, &[(0, 1, 1), (1, 0, -1)]).is_err());
    }

    #[test]
    fn symmetrize_single_edge() {
        let g = SignedDiGraph::from_signed_pairs(2, true, &[(0, 1, 1)]).unwrap();
        let s = g.symmetrize();
        assert_eq!(s.get(0, 1), 0.5);
        assert_eq!(s.get(1, 0), 0.5);
    }

    #[test]
    fn symmetrize_reciprocal_pairs() {
        let g = SignedDiGraph::from_signed_pairs(2, true, &[(0, 1, 1), (1, 0, 1)]).unwrap();
        assert_eq!(g.symmetrize().get(0, 1), 1.0);
        let g = SignedDiGraph::from_signed_pairs(2, true, &[(0, 1, 1), (1, 0, -1)]).unwrap();
        let s = g.symmetrize();
        assert_eq!(s.get(0, 1), 0.0);
        assert_eq!(s.nnz(), 0);
    }

    #[test]
    fn path_degrees() {
        let g = path();
        assert_eq!(
            g.degrees(DegreeMode::Absolute).values.to_vec(),
            vec![1.0, 2.0, 1.0]
        );
        assert_eq!(
            g.degrees(DegreeMode::Signed).values.to_vec(),
            vec![1.0, 0.0, -1.0]
        );
    }

    #[test]
    fn isolated_node_has_zero_degree() {
        let g = SignedDiGraph::from_signed_pairs(3, false, &[(0, 1, -1)]).unwrap();
        for mode in [
            DegreeMode::Signed,
            DegreeMode::Absolute,
            DegreeMode::AbsoluteSymmetric,
        ] {
            assert_eq!(g.degrees(mode).values[2], 0.0);
        }
        assert_eq!(g.isolated_nodes(), vec![2]);
    }

    #[test]
    fn directed_edge_symmetric_absolute_degrees() {
        let g = SignedDiGraph::from_signed_pairs(2, true, &[(0, 1, 1)]).unwrap();
        assert_eq!(
            g.degrees(DegreeMode::AbsoluteSymmetric).values.to_vec(),
            vec![0.5, 0.5]
        );
    }

    #[test]
    fn drop_isolated_remaps() {
        let g = SignedDiGraph::from_signed_pairs(4, true, &[(1, 3, -1), (0, 2, 1), (2, 0, -1)])
            .unwrap();
        let (h, kept) = g.drop_isolated();
        // Node 0 and 2 cancel out in A_s; only 1 and 3 survive.
        assert_eq!(kept, vec![1, 3]);
        assert_eq!(h.n_nodes(), 2);
        assert_eq!(h.edges(), &[Edge::new(0, 1, Sign::Negative)]);
    }

    fn arb_graph() -> impl Strategy<Value = SignedDiGraph> {
        (1usize..12, any::<bool>()).prop_flat_map(|(n, directed)| {
            proptest::collection::vec((0..n, 0..n, any::<bool>()), 0..40).prop_map(move |raw| {
                let mut seen = HashSet::new();
                let edges = raw
                    .into_iter()
                    .filter(|(s, d, _)| s != d)
                    .filter(|(s, d, _)| {
                        seen.insert(if directed {
                            (*s, *d)
                        } else {
                            (*s.min(d), *s.max(d))
                        })
                    })
                    .map(|(s, d, p)| {
                        Edge::new(s, d, if p { Sign::Positive } else { Sign::Negative })
                    })
                    .collect();
                SignedDiGraph::new(n, directed, edges).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn symmetrize_is_exactly_symmetric(g in arb_graph()) {
            let s = g.symmetrize();
            prop_assert_eq!(s.to_dense(), s.to_dense().t().to_owned());
            for (_, _, v) in s.iter() {
                prop_assert!([-1.0, -0.5, 0.5, 1.0].contains(&v));
            }
        }

        #[test]
        fn absolute_degree_dominates_signed(g in arb_graph()) {
            let a = g.degrees(DegreeMode::Absolute).values;
            let s = g.degrees(DegreeMode::Signed).values;
            for (x, y) in a.iter().zip(s.iter()) {
                prop_assert!(*x >= y.abs());
            }
        }
    }
}
