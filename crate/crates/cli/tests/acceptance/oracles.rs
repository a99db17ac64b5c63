//! Dense reference implementations and random inputs shared by the criteria.

use std::f64::consts::PI;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rand::Rng;
use spectra_core::autodiff::{Parameters, Tape};
use spectra_core::graph::{Edge, Sign, SignedDiGraph};
use spectra_core::models::{ForwardOptions, IsolatedPolicy, Model, ModelConfig, ModelKind};
use spectra_core::rng::{seeded, StreamRng};

pub fn rng(seed: u64) -> StreamRng {
    seeded(seed)
}

pub fn rand_mat(rng: &mut StreamRng, r: usize, c: usize) -> Array2<f64> {
    Array2::from_shape_fn((r, c), |_| rng.random::<f64>() * 2.0 - 1.0)
}

fn random_sign(rng: &mut StreamRng) -> Sign {
    if rng.random::<bool>() {
        Sign::Positive
    } else {
        Sign::Negative
    }
}

/// Directed graph with each ordered pair present with probability `density`.
pub fn random_digraph(rng: &mut StreamRng, n: usize, density: f64) -> SignedDiGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random::<f64>() < density {
                edges.push(Edge::new(i, j, random_sign(rng)));
            }
        }
    }
    SignedDiGraph::new(n, true, edges).expect("valid random digraph")
}

/// Undirected all-positive graph on `n` nodes.
pub fn random_positive_graph(rng: &mut StreamRng, n: usize, density: f64) -> SignedDiGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < density {
                edges.push(Edge::new(i, j, Sign::Positive));
            }
        }
    }
    SignedDiGraph::new(n, false, edges).expect("valid random graph")
}

/// Signed graph on `n` nodes where a ring guarantees every node an edge.
pub fn connected_graph(n: usize, directed: bool, seed: u64) -> SignedDiGraph {
    let mut rng = rng(seed);
    let mut pairs = Vec::new();
    for i in 0..n {
        let s = if rng.random::<bool>() { 1 } else { -1 };
        pairs.push((i, (i + 1) % n, s));
    }
    for i in 0..n {
        for j in 0..n {
            let fresh = !pairs
                .iter()
                .any(|&(a, b, _)| (a, b) == (i, j) || (!directed && (a, b) == (j, i)));
            if i != j && fresh && (directed || i < j) && rng.random::<f64>() < 0.25 {
                pairs.push((i, j, if rng.random::<bool>() { 1 } else { -1 }));
            }
        }
    }
    SignedDiGraph::from_signed_pairs(n, directed, &pairs).expect("valid ring graph")
}

/// Raw adjacency `A` from the edge list.
pub fn dense_a(g: &SignedDiGraph) -> Array2<f64> {
    let n = g.n_nodes();
    let mut a = Array2::<f64>::zeros((n, n));
    for e in g.edges() {
        a[[e.src, e.dst]] = e.sign.value();
        if !g.is_directed() {
            a[[e.dst, e.src]] = e.sign.value();
        }
    }
    a
}

/// `A_s = (A + Aᵀ)/2`.
pub fn dense_as(g: &SignedDiGraph) -> Array2<f64> {
    let a = dense_a(g);
    (&a + &a.t()) * 0.5
}

pub fn abs_degrees(a_s: &Array2<f64>) -> Vec<f64> {
    a_s.rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum())
        .collect()
}

/// `D̄ − A_s`, optionally normalized by `D̄^{-1/2}` on both sides.
pub fn dense_signed_laplacian(g: &SignedDiGraph, normalized: bool) -> Array2<f64> {
    let a_s = dense_as(g);
    let d = abs_degrees(&a_s);
    let n = g.n_nodes();
    Array2::from_shape_fn((n, n), |(i, j)| {
        let l = if i == j { d[i] } else { -a_s[[i, j]] };
        if normalized {
            l / (d[i] * d[j]).sqrt()
        } else {
            l
        }
    })
}

/// `D̃^{-1/2}(A_s + I)D̃^{-1/2}` with `D̃ = D̄ + I`.
pub fn dense_propagation(g: &SignedDiGraph) -> Array2<f64> {
    let a_s = dense_as(g);
    let d: Vec<f64> = abs_degrees(&a_s).iter().map(|d| d + 1.0).collect();
    let n = g.n_nodes();
    Array2::from_shape_fn((n, n), |(i, j)| {
        (a_s[[i, j]] + if i == j { 1.0 } else { 0.0 }) / (d[i] * d[j]).sqrt()
    })
}

/// Renormalized propagation with the directional phase `e^{i2πq(A_ij − A_ji)}`.
pub fn dense_magnetic_propagation(g: &SignedDiGraph, q: f64) -> Array2<Complex64> {
    let a = dense_a(g);
    let a_s = dense_as(g);
    let d: Vec<f64> = abs_degrees(&a_s).iter().map(|d| d + 1.0).collect();
    let n = g.n_nodes();
    Array2::from_shape_fn((n, n), |(i, j)| {
        let phase = Complex64::from_polar(1.0, 2.0 * PI * q * (a[[i, j]] - a[[j, i]]));
        (phase * a_s[[i, j]] + if i == j { 1.0 } else { 0.0 }) / (d[i] * d[j]).sqrt()
    })
}

pub fn relu(m: Array2<f64>) -> Array2<f64> {
    m.mapv(|v| v.max(0.0))
}

pub fn max_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn param<'a>(params: &'a Parameters, name: &str) -> &'a Array2<f64> {
    params
        .get(name)
        .unwrap_or_else(|e| panic!("missing parameter {name}: {e}"))
}

/// Dropout-free model configuration.
pub fn model_config(kind: ModelKind, layers: usize, hidden: usize) -> ModelConfig {
    ModelConfig {
        model: kind,
        n_layers: layers,
        hidden_dim: hidden,
        dropout: 0.0,
        ..ModelConfig::new(kind)
    }
}

/// Evaluation-mode forward pass.
pub fn forward(
    model: &Model,
    g: &SignedDiGraph,
    x: &Array2<f64>,
    params: &Parameters,
    opts: ForwardOptions,
) -> Array2<f64> {
    let ctx = model
        .prepare(g, IsolatedPolicy::Error)
        .expect("graph without isolated nodes");
    let mut t = Tape::new();
    let b = t.bind(params);
    let xv = t.constant(x.clone());
    let out = model
        .forward(&mut t, &ctx, xv, &b, &opts)
        .expect("forward pass");
    t.value(out).clone()
}

pub fn dense_sgcn1(
    g: &SignedDiGraph,
    x: &Array2<f64>,
    params: &Parameters,
    layers: usize,
) -> Array2<f64> {
    let p = dense_propagation(g);
    let mut h = x.clone();
    for l in 0..layers {
        h = p.dot(&h).dot(param(params, &format!("theta{l}")));
        if l + 1 < layers {
            h = relu(h);
        }
    }
    h
}

pub fn dense_s2gc(
    g: &SignedDiGraph,
    x: &Array2<f64>,
    params: &Parameters,
    hops: usize,
) -> Array2<f64> {
    let p = dense_propagation(g);
    let mut power = Array2::<f64>::eye(g.n_nodes());
    for _ in 0..hops {
        power = power.dot(&p);
    }
    power.dot(x).dot(param(params, "theta"))
}

/// Per-edge evaluation of the attention aggregation with a dense coefficient matrix.
pub fn dense_sgcn2(
    g: &SignedDiGraph,
    x: &Array2<f64>,
    params: &Parameters,
    layers: usize,
) -> Array2<f64> {
    let a = dense_as(g);
    let d = abs_degrees(&a);
    let n = g.n_nodes();
    let mut h = relu(x.dot(param(params, "theta1")));
    for l in 0..layers {
        let s = h.dot(param(params, &format!("att{l}.src")));
        let t = h.dot(param(params, &format!("att{l}.dst")));
        let m = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j || a[[i, j]] == 0.0 {
                return 0.0;
            }
            (s[[i, 0]] + t[[j, 0]]).tanh() * a[[i, j]] / (d[i] * d[j]).sqrt()
        });
        h = &h + &m.dot(&h);
    }
    h.dot(param(params, "theta2"))
}

pub fn dense_magnet(
    g: &SignedDiGraph,
    x: &Array2<f64>,
    params: &Parameters,
    layers: usize,
    q: f64,
) -> Array2<f64> {
    let p = dense_magnetic_propagation(g, q);
    let mut h = x.mapv(|v| Complex64::new(v, 0.0));
    for l in 0..layers {
        let tr = param(params, &format!("theta{l}.re"));
        let ti = param(params, &format!("theta{l}.im"));
        let theta =
            Array2::from_shape_fn(tr.dim(), |(i, j)| Complex64::new(tr[[i, j]], ti[[i, j]]));
        h = p
            .dot(&h)
            .dot(&theta)
            .mapv(|z| Complex64::new(z.re.max(0.0), z.im.max(0.0)));
    }
    let re = h.mapv(|z| z.re);
    let im = h.mapv(|z| z.im);
    ndarray::concatenate![Axis(1), re, im].dot(param(params, "readout"))
}
