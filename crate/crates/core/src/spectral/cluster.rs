use std::collections::HashMap;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;

use super::{build_laplacian, LaplacianKind, Operator, OperatorSpectrum, SpectralError};
use crate::graph::SignedDiGraph;
use crate::linalg::{EigOptions, Which};
use crate::rng::{derive_seed, seeded};

pub const KMEANS_RESTARTS: usize = 50;
const KMEANS_MAX_ITER: usize = 300;

#[derive(Debug, Clone)]
pub struct ClusterResult {
    pub labels: Vec<usize>,
    /// One row `(Re v_i, Im v_i)` per node.
    pub embedding: Array2<f64>,
    pub eigenvalue: f64,
}

/// Clusters the nodes of `g` by the eigenvector of the smallest eigenvalue of
/// the unnormalized signed magnetic Laplacian, embedded in the complex plane.
pub fn magnetic_cluster(
    g: &SignedDiGraph,
    q: f64,
    k: usize,
    seed: u64,
) -> Result<ClusterResult, SpectralError> {
    let n = g.n_nodes();
    if n == 0 {
        return Err(SpectralError::InvalidArgument(
            "cannot cluster an empty graph".into(),
        ));
    }
    if k == 0 {
        return Err(SpectralError::InvalidArgument(
            "k must be at least 1".into(),
        ));
    }
    let op = build_laplacian(g, LaplacianKind::signed_magnetic(false, q)?)?;
    let spec = if n <= EigOptions::default().max_dim {
        op.full_spectrum()?
    } else {
        op.partial_spectrum(1, Which::Smallest)?
    };
    let (eigenvalue, embedding) = match (&op, spec) {
        (Operator::Complex(_), OperatorSpectrum::Complex(s)) => {
            let v = s.eigenvectors.column(0);
            (
                s.eigenvalues[0],
                Array2::from_shape_fn((n, 2), |(i, c)| if c == 0 { v[i].re } else { v[i].im }),
            )
        }
        _ => unreachable!("signed magnetic Laplacian is complex"),
    };
    let labels = if k == 1 {
        vec![0; n]
    } else {
        kmeans(&embedding.view(), k, KMEANS_RESTARTS, seed).0
    };
    Ok(ClusterResult {
        labels,
        embedding,
        eigenvalue,
    })
}

fn sq_dist(a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means with k-means++ seeding; the restart with the lowest inertia wins.
/// Labels are renumbered by first appearance. Returns `(labels, inertia)`.
pub fn kmeans(points: &ArrayView2<f64>, k: usize, restarts: usize, seed: u64) -> (Vec<usize>, f64) {
    let n = points.nrows();
    if n == 0 || k <= 1 {
        let inertia = if n == 0 {
            0.0
        } else {
            let mean = points.mean_axis(ndarray::Axis(0)).expect("non-empty");
            points
                .rows()
                .into_iter()
                .map(|p| sq_dist(&p, &mean.view()))
                .sum()
        };
        return (vec![0; n], inertia);
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for r in 0..restarts.max(1) {
        let (labels, inertia) = lloyd(points, k, derive_seed(seed, r as u64));
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((labels, inertia));
        }
    }
    let (labels, inertia) = best.expect("at least one restart");
    (canonical_labels(&labels), inertia)
}

fn lloyd(points: &ArrayView2<f64>, k: usize, seed: u64) -> (Vec<usize>, f64) {
    let (n, dim) = points.dim();
    let mut rng = seeded(seed);
    let mut centers = Array2::<f64>::zeros((k, dim));
    centers
        .row_mut(0)
        .assign(&points.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = points
        .rows()
        .into_iter()
        .map(|p| sq_dist(&p, &centers.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&points.row(pick));
        for (i, p) in points.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(&p, &centers.row(c)));
        }
    }

    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (i, p) in points.rows().into_iter().enumerate() {
            let mut best = (0, f64::INFINITY);
            for c in 0..k {
                let d = sq_dist(&p, &centers.row(c));
                if d < best.1 {
                    best = (c, d);
                }
            }
            if labels[i] != best.0 {
                labels[i] = best.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = Array2::<f64>::zeros((k, dim));
        let mut counts = vec![0usize; k];
        for (i, p) in points.rows().into_iter().enumerate() {
            let mut row = sums.row_mut(labels[i]);
            row += &p;
            counts[labels[i]] += 1;
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                centers.row_mut(c).assign(&(&sums.row(c) / count as f64));
            }
        }
    }
    let inertia = points
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, p)| sq_dist(&p, &centers.row(labels[i])))
        .sum();
    (labels, inertia)
}

fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

/// Adjusted Rand index between two partitions of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64, SpectralError> {
    if a.len() != b.len() {
        return Err(SpectralError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let n = a.len();
    let comb2 = |x: f64| x * (x - 1.0) / 2.0;
    let mut table: HashMap<(usize, usize), f64> = HashMap::new();
    let mut rows: HashMap<usize, f64> = HashMap::new();
    let mut cols: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b.iter()) {
        *table.entry((x, y)).or_insert(0.0) += 1.0;
        *rows.entry(x).or_insert(0.0) += 1.0;
        *cols.entry(y).or_insert(0.0) += 1.0;
    }
    let index: f64 = table.values().map(|&c| comb2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| comb2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| comb2(c)).sum();
    let total = comb2(n as f64);
    let expected = if total > 0.0 {
        sum_a * sum_b / total
    } else {
        0.0
    };
    let max_index = 0.5 * (sum_a + sum_b);
    let denom = max_index - expected;
    if denom == 0.0 {
        // Both partitions trivial (single cluster or all singletons).
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}
