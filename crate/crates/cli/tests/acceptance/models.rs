use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;
use spectra_core::autodiff::{grad_check, AutodiffError, Bound, Parameters, Tape, Var};
use spectra_core::linalg::CsrMatrix;
use spectra_core::models::{
    edge_mlp, init_edge_mlp, ForwardOptions, IsolatedPolicy, Model, ModelConfig, ModelError,
    ModelKind,
};
use spectra_core::rng::StreamRng;
use spectra_core::spectral::{
    build_laplacian, pass_filters, renormalized_propagation, LaplacianKind,
};

use crate::oracles::{
    connected_graph, dense_magnet, dense_propagation, dense_s2gc, dense_sgcn1, dense_sgcn2,
    forward, max_diff, model_config, param, rand_mat, random_digraph, relu, rng,
};
use crate::{verdict, Verdict};

const EPS: f64 = 1e-5;
const PRIMITIVE_TOL: f64 = 1e-6;
const MODEL_TOL: f64 = 1e-4;
const ORACLE_TOL: f64 = 1e-12;

/// `err < tol`, false for NaN.
fn within(err: f64, tol: f64) -> bool {
    err < tol
}

/// Values bounded away from zero so ReLU kinks are not straddled.
fn away_from_zero(rng: &mut StreamRng, r: usize, c: usize) -> Array2<f64> {
    Array2::from_shape_fn((r, c), |_| {
        let m = 0.2 + rng.random::<f64>();
        if rng.random::<bool>() {
            m
        } else {
            -m
        }
    })
}

/// Reduces any output to a scalar through a fixed random contraction.
fn contract(t: &mut Tape, y: Var) -> Result<Var, AutodiffError> {
    let mut rng = rng(77);
    let (r, c) = t.shape(y);
    let w = t.constant(rand_mat(&mut rng, r, c));
    let p = t.mul(y, w)?;
    Ok(t.sum(p))
}

type OpCase = (
    &'static str,
    Vec<Array2<f64>>,
    Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>>,
);

fn primitive_cases() -> Vec<OpCase> {
    let mut rng = rng(11);
    let a = rand_mat(&mut rng, 3, 4);
    let b = rand_mat(&mut rng, 3, 4);
    let trip: Vec<_> = (0..5)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .filter(|&(i, j)| (i * 3 + j) % 2 == 0)
        .map(|(i, j)| (i, j, 0.7 * i as f64 - 0.3 * j as f64 + 0.1))
        .collect();
    let sparse = Arc::new(CsrMatrix::from_triplets(5, 4, trip).unwrap());
    let idx = Arc::new(vec![3, 0, 3, 1, 2, 2]);
    let idx2 = Arc::clone(&idx);
    let logits = rand_mat(&mut rng, 5, 3) * 3.0;
    let one_hot = Array2::from_shape_fn(
        (5, 3),
        |(i, c)| if (i * 2 + 1) % 3 == c { 1.0 } else { 0.0 },
    );
    let z = rand_mat(&mut rng, 6, 1) * 4.0;
    let binary = Array2::from_shape_fn((6, 1), |(i, _)| (i % 2) as f64);
    vec![
        (
            "matmul",
            vec![rand_mat(&mut rng, 3, 4), rand_mat(&mut rng, 4, 2)],
            Box::new(|t, v| t.matmul(v[0], v[1])),
        ),
        (
            "sparse_matmul",
            vec![rand_mat(&mut rng, 4, 3)],
            Box::new(move |t, v| t.sparse_matmul(&sparse, v[0])),
        ),
        (
            "add",
            vec![a.clone(), b.clone()],
            Box::new(|t, v| t.add(v[0], v[1])),
        ),
        (
            "sub",
            vec![a.clone(), b.clone()],
            Box::new(|t, v| t.sub(v[0], v[1])),
        ),
        (
            "mul",
            vec![a.clone(), b.clone()],
            Box::new(|t, v| t.mul(v[0], v[1])),
        ),
        (
            "scale",
            vec![a.clone()],
            Box::new(|t, v| Ok(t.scale(v[0], -2.5))),
        ),
        ("tanh", vec![a.clone()], Box::new(|t, v| Ok(t.tanh(v[0])))),
        (
            "relu",
            vec![away_from_zero(&mut rng, 3, 4)],
            Box::new(|t, v| Ok(t.relu(v[0]))),
        ),
        (
            "add_row",
            vec![rand_mat(&mut rng, 4, 3), rand_mat(&mut rng, 1, 3)],
            Box::new(|t, v| t.add_row(v[0], v[1])),
        ),
        (
            "mul_col",
            vec![rand_mat(&mut rng, 4, 3), rand_mat(&mut rng, 4, 1)],
            Box::new(|t, v| t.mul_col(v[0], v[1])),
        ),
        (
            "concat_rows",
            vec![rand_mat(&mut rng, 2, 3), rand_mat(&mut rng, 4, 3)],
            Box::new(|t, v| t.concat_rows(&[v[0], v[1]])),
        ),
        (
            "concat_cols",
            vec![rand_mat(&mut rng, 2, 3), rand_mat(&mut rng, 2, 5)],
            Box::new(|t, v| t.concat_cols(&[v[0], v[1]])),
        ),
        (
            "gather_rows",
            vec![rand_mat(&mut rng, 4, 3)],
            Box::new(move |t, v| t.gather_rows(v[0], &idx)),
        ),
        (
            "scatter_add_rows",
            vec![rand_mat(&mut rng, 6, 3)],
            Box::new(move |t, v| t.scatter_add_rows(v[0], &idx2, 5)),
        ),
        (
            "dropout",
            vec![rand_mat(&mut rng, 5, 4)],
            Box::new(|t, v| t.dropout(v[0], 0.3, true, 99)),
        ),
        (
            "sum",
            vec![rand_mat(&mut rng, 5, 4)],
            Box::new(|t, v| Ok(t.sum(v[0]))),
        ),
        (
            "mean",
            vec![rand_mat(&mut rng, 5, 4)],
            Box::new(|t, v| Ok(t.mean(v[0]))),
        ),
        (
            "softmax_cross_entropy",
            vec![logits],
            Box::new(move |t, v| t.softmax_cross_entropy(v[0], &one_hot)),
        ),
        (
            "bce_with_logits",
            vec![z],
            Box::new(move |t, v| t.bce_with_logits(v[0], &binary)),
        ),
    ]
}

fn model_gradient(kind: ModelKind, directed: bool) -> f64 {
    let g = connected_graph(6, directed, 123);
    let mut rng = rng(124);
    let x = rand_mat(&mut rng, 6, 3);
    let model = Model::new(model_config(kind, 2, 4), 3, 3).unwrap();
    let params = model.init_params(125);
    let ctx = model.prepare(&g, IsolatedPolicy::Error).unwrap();
    let names: Vec<String> = params.iter().map(|(n, _)| n.to_string()).collect();
    let inputs: Vec<Array2<f64>> = params.iter().map(|(_, v)| v.clone()).collect();
    let targets = Array2::from_shape_fn((6, 3), |(i, c)| if i % 3 == c { 1.0 } else { 0.0 });
    grad_check(
        |t: &mut Tape, vars: &[Var]| {
            let b: Bound = names.iter().cloned().zip(vars.iter().copied()).collect();
            let xv = t.constant(x.clone());
            let out = model
                .forward(t, &ctx, xv, &b, &ForwardOptions::eval())
                .map_err(|e| match e {
                    ModelError::Autodiff(e) => e,
                    other => AutodiffError::InvalidArgument(other.to_string()),
                })?;
            t.softmax_cross_entropy(out, &targets)
        },
        &inputs,
        EPS,
    )
    .unwrap()
}

/// Edge MLP gradient with respect to its weights and the node embeddings.
fn edge_mlp_gradient() -> f64 {
    let mut rng = rng(31);
    let h = rand_mat(&mut rng, 5, 3);
    let mut params = Parameters::new();
    init_edge_mlp(&mut params, 3, 6, 32);
    params.insert("mlp.b1", rand_mat(&mut rng, 1, 6) * 0.1);
    let u = Arc::new(vec![0, 2, 4, 1]);
    let v = Arc::new(vec![1, 3, 0, 4]);
    let names: Vec<String> = params.iter().map(|(n, _)| n.to_string()).collect();
    let mut inputs: Vec<Array2<f64>> = params.iter().map(|(_, v)| v.clone()).collect();
    inputs.push(h);
    let targets = Array2::from_shape_fn((4, 3), |(i, c)| if i % 3 == c { 1.0 } else { 0.0 });
    grad_check(
        |t, vars| {
            let b: Bound = names.iter().cloned().zip(vars.iter().copied()).collect();
            let out = edge_mlp(t, vars[names.len()], &u, &v, &b)
                .map_err(|e| AutodiffError::InvalidArgument(e.to_string()))?;
            t.softmax_cross_entropy(out, &targets)
        },
        &inputs,
        EPS,
    )
    .unwrap()
}

pub fn gradients() -> Verdict {
    let mut failures = Vec::new();
    let mut worst_op = 0.0f64;
    let cases = primitive_cases();
    let n_ops = cases.len();
    for (name, inputs, f) in cases {
        let err = grad_check(
            |t, v| {
                let y = f(t, v)?;
                contract(t, y)
            },
            &inputs,
            EPS,
        )
        .unwrap();
        worst_op = worst_op.max(err);
        if !within(err, PRIMITIVE_TOL) {
            failures.push(format!("{name} {err:.1e}"));
        }
    }
    let mut worst_model = 0.0f64;
    for kind in ModelKind::ALL {
        for directed in [false, true] {
            let err = model_gradient(kind, directed);
            worst_model = worst_model.max(err);
            if !within(err, MODEL_TOL) {
                failures.push(format!("{} directed={directed} {err:.1e}", kind.name()));
            }
        }
    }
    let err = edge_mlp_gradient();
    worst_model = worst_model.max(err);
    if !within(err, MODEL_TOL) {
        failures.push(format!("edge_mlp {err:.1e}"));
    }
    let detail = format!(
        "max relative error {worst_op:.1e} over {n_ops} ops, {worst_model:.1e} over full models"
    );
    if failures.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; failing: {}", failures.join(", ")))
    }
}

pub fn dense_oracles() -> Verdict {
    let mut worst = [0.0f64; 4];
    for seed in 0..6u64 {
        let directed = seed % 2 == 1;
        let n = 6 + (seed as usize % 3);
        let g = connected_graph(n, directed, 40 + seed);
        let mut rng = rng(seed);
        let x = rand_mat(&mut rng, n, 3);
        let run = |cfg: ModelConfig| {
            let model = Model::new(cfg, 3, 2).unwrap();
            let params = model.init_params(seed);
            let got = forward(&model, &g, &x, &params, ForwardOptions::eval());
            (got, params)
        };
        let (got, params) = run(model_config(ModelKind::Sgcn1, 2, 4));
        worst[0] = worst[0].max(max_diff(&got, &dense_sgcn1(&g, &x, &params, 2)));
        let (got, params) = run(model_config(ModelKind::Sgcn2, 2, 4));
        worst[1] = worst[1].max(max_diff(&got, &dense_sgcn2(&g, &x, &params, 2)));
        let cfg = model_config(ModelKind::S2gc, 1, 4);
        let hops = cfg.s2gc_hops;
        let (got, params) = run(cfg);
        worst[2] = worst[2].max(max_diff(&got, &dense_s2gc(&g, &x, &params, hops)));
        let q = 0.04 * seed as f64;
        let (got, params) = run(ModelConfig {
            q,
            ..model_config(ModelKind::Magnet, 2, 4)
        });
        worst[3] = worst[3].max(max_diff(&got, &dense_magnet(&g, &x, &params, 2, q)));
    }
    let mut power_gap = 0.0f64;
    let g = connected_graph(8, true, 21);
    let x = rand_mat(&mut rng(22), 8, 3);
    for hops in [0, 1, 2, 3, 5, 8] {
        let model = Model::new(
            ModelConfig {
                s2gc_hops: hops,
                ..model_config(ModelKind::S2gc, 1, 4)
            },
            3,
            2,
        )
        .unwrap();
        let params = model.init_params(hops as u64);
        let got = forward(&model, &g, &x, &params, ForwardOptions::eval());
        power_gap = power_gap.max(max_diff(&got, &dense_s2gc(&g, &x, &params, hops)));
    }
    let ok = worst.iter().all(|&w| w <= ORACLE_TOL) && power_gap <= 1e-10;
    verdict(
        ok,
        format!(
            "max diff sgcn1 {:.1e}, sgcn2 {:.1e}, s2gc {:.1e}, magnet {:.1e}; s2gc vs matrix power {power_gap:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn pass_filter_identity() -> Result<usize, String> {
    let mut rng = rng(6);
    let mut cases = 0;
    for trial in 0..50 {
        let n = rng.random_range(2..=14);
        let g = random_digraph(&mut rng, n, 0.3).drop_isolated().0;
        if g.n_nodes() == 0 {
            continue;
        }
        let (low, high) = pass_filters(&g).unwrap();
        if low.to_dense() + high.to_dense() != Array2::<f64>::eye(g.n_nodes()) * 2.0 {
            return Err(format!("trial {trial}: P^Low + P^High differs from 2I"));
        }
        let l = build_laplacian(&g, LaplacianKind::signed(true)).unwrap();
        if l.as_real().unwrap() != &high {
            return Err(format!(
                "trial {trial}: P^High differs from the normalized signed Laplacian"
            ));
        }
        cases += 1;
    }
    Ok(cases)
}

/// sgcn2 with every attention coefficient fixed to 1 applies `2I − L̄_n` per layer.
fn unit_attention_identity() -> Result<f64, String> {
    let mut dense_gap = 0.0f64;
    for seed in 0..6u64 {
        let directed = seed % 2 == 0;
        let g = connected_graph(8, directed, 5 + seed);
        let l = build_laplacian(&g, LaplacianKind::signed(true)).unwrap();
        let l = l.as_real().unwrap();
        let off: Vec<_> = l
            .iter()
            .filter(|&(i, j, _)| i != j)
            .map(|(i, j, v)| (i, j, -v))
            .collect();
        let off = CsrMatrix::from_triplets(8, 8, off).unwrap();
        let two_minus_l = Array2::<f64>::eye(8) * 2.0 - l.to_dense();
        for layers in 1..=3 {
            let model = Model::new(model_config(ModelKind::Sgcn2, layers, 3), 3, 3).unwrap();
            let mut params = model.init_params(seed);
            params.insert("theta1", Array2::eye(3));
            params.insert("theta2", Array2::eye(3));
            // Non-negative input so the first ReLU passes it through.
            let h0 = rand_mat(&mut rng(seed + 100), 8, 3).mapv(f64::abs);
            let opts = ForwardOptions {
                fixed_beta: Some(1.0),
                ..ForwardOptions::eval()
            };
            let got = forward(&model, &g, &h0, &params, opts);
            let (mut exact, mut dense) = (h0.clone(), h0.clone());
            for _ in 0..layers {
                exact = &exact + &off.mul_dense(&exact.view()).unwrap();
                dense = two_minus_l.dot(&dense);
            }
            if got != exact {
                return Err(format!(
                    "seed {seed}, {layers} layers: differs from (2I − L̄_n)H by {:.1e}",
                    max_diff(&got, &exact)
                ));
            }
            dense_gap = dense_gap.max(max_diff(&got, &dense));
        }
    }
    Ok(dense_gap)
}

/// Largest imaginary magnitude of the q = 0 operator and of a real-weight embedding.
fn magnet_q_zero() -> Result<(f64, f64), String> {
    let mut op_im = 0.0f64;
    let mut emb_im = 0.0f64;
    for seed in 0..6u64 {
        let g = connected_graph(8, false, 77 + seed);
        let p = renormalized_propagation(&g, Some(0.0)).unwrap();
        op_im = p
            .as_complex()
            .unwrap()
            .iter()
            .fold(op_im, |m, (_, _, z)| m.max(z.im.abs()));
        let x = rand_mat(&mut rng(78 + seed), 8, 3);
        let model = Model::new(
            ModelConfig {
                q: 0.0,
                ..model_config(ModelKind::Magnet, 3, 4)
            },
            3,
            2,
        )
        .unwrap();
        let mut params = model.init_params(seed);
        for l in 0..3 {
            let dim = param(&params, &format!("theta{l}.im")).dim();
            params.insert(format!("theta{l}.im"), Array2::zeros(dim));
        }
        let ctx = model.prepare(&g, IsolatedPolicy::Error).unwrap();
        let mut t = Tape::new();
        let b = t.bind(&params);
        let xv = t.constant(x.clone());
        let (hr, hi) = model
            .magnet_embedding(&mut t, &ctx, xv, &b, &ForwardOptions::eval())
            .unwrap();
        emb_im = t.value(hi).iter().fold(emb_im, |m, v| m.max(v.abs()));
        // The real channel is the sgcn1 hidden stack with the same weights.
        let p = dense_propagation(&g);
        let mut h = x;
        for l in 0..3 {
            h = relu(p.dot(&h).dot(param(&params, &format!("theta{l}.re"))));
        }
        let gap = max_diff(t.value(hr), &h);
        if gap > ORACLE_TOL {
            return Err(format!(
                "seed {seed}: real channel is {gap:.1e} from the real propagation"
            ));
        }
    }
    if op_im <= 1e-14 && emb_im <= 1e-14 {
        Ok((op_im, emb_im))
    } else {
        Err(format!(
            "imaginary parts reach {op_im:.1e} in the operator and {emb_im:.1e} in the embedding"
        ))
    }
}

pub fn identities() -> Verdict {
    match (pass_filter_identity(), unit_attention_identity(), magnet_q_zero()) {
        (Ok(a), Ok(b), Ok((op, emb))) => Verdict::Pass(format!(
            "P^Low + P^High = 2I exact on {a} graphs; unit attention exact (dense product within {b:.1e}); \
             q = 0 imaginary parts {op:.1e} operator, {emb:.1e} embedding"
        )),
        (a, b, c) => Verdict::Fail([a.err(), b.err(), c.err()].into_iter().flatten().collect::<Vec<_>>().join("; ")),
    }
}
