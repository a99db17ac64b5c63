use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rand::Rng;
use spectra_core::graph::SignedDiGraph;
use spectra_core::models::{ForwardOptions, Model, ModelKind};
use spectra_core::spectral::{build_laplacian, LaplacianKind, Operator};

use crate::oracles::{
    dense_signed_laplacian, forward, max_diff, model_config, param, rand_mat, random_digraph,
    random_positive_graph, relu, rng,
};
use crate::{verdict, Verdict};

const PSD_TOL: f64 = 1e-8;
const ENSEMBLE: usize = 200;

/// Random signed digraphs with `N ≤ 40`, density `≤ 0.3` and `q ~ U[0, 0.25)`.
fn ensemble() -> Vec<(SignedDiGraph, f64)> {
    let mut rng = rng(1);
    (0..ENSEMBLE)
        .map(|_| {
            let n = rng.random_range(2..=40);
            let density = rng.random::<f64>() * 0.3;
            let g = random_digraph(&mut rng, n, density);
            (g, rng.random::<f64>() * 0.25)
        })
        .collect()
}

fn eigenvalues(op: &Operator) -> Vec<f64> {
    op.full_spectrum()
        .expect("dense eigensolver")
        .eigenvalues()
        .to_vec()
}

/// Smallest eigenvalue from an independent solver.
fn oracle_min_eigenvalue(m: &Array2<Complex64>) -> f64 {
    let n = m.nrows();
    let e = SymmetricEigen::new(DMatrix::from_fn(n, n, |i, j| m[[i, j]]));
    e.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn psd() -> Verdict {
    let (mut raw_min, mut norm_min, mut oracle_gap) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    let mut normalized = 0;
    for (g, q) in ensemble() {
        let op = build_laplacian(&g, LaplacianKind::signed_magnetic(false, q).unwrap()).unwrap();
        let m = min_of(&eigenvalues(&op));
        oracle_gap = oracle_gap.max((m - oracle_min_eigenvalue(&op.to_dense_complex())).abs());
        raw_min = raw_min.min(m);
        // The normalized operator is undefined on isolated nodes.
        let (g, _) = g.drop_isolated();
        if g.n_nodes() == 0 {
            continue;
        }
        let op = build_laplacian(&g, LaplacianKind::signed_magnetic(true, q).unwrap()).unwrap();
        let m = min_of(&eigenvalues(&op));
        oracle_gap = oracle_gap.max((m - oracle_min_eigenvalue(&op.to_dense_complex())).abs());
        norm_min = norm_min.min(m);
        normalized += 1;
    }
    verdict(
        raw_min >= -PSD_TOL && norm_min >= -PSD_TOL && normalized > ENSEMBLE / 2 && oracle_gap <= 1e-9,
        format!(
            "min eigenvalue {raw_min:.2e} raw, {norm_min:.2e} normalized ({ENSEMBLE} graphs, {normalized} normalizable); \
             max gap to reference solver {oracle_gap:.1e}"
        ),
    )
}

pub fn range() -> Verdict {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut checked = 0;
    for (g, q) in ensemble() {
        let (g, _) = g.drop_isolated();
        if g.n_nodes() == 0 {
            continue;
        }
        let ev = eigenvalues(
            &build_laplacian(&g, LaplacianKind::signed_magnetic(true, q).unwrap()).unwrap(),
        );
        lo = lo.min(min_of(&ev));
        hi = hi.max(max_of(&ev));
        checked += 1;
    }
    let in_range = lo >= -PSD_TOL && hi <= 2.0 + PSD_TOL;
    // A single negative edge, undirected and directed, at several phases.
    let mut tops = Vec::new();
    for directed in [false, true] {
        let g = SignedDiGraph::from_signed_pairs(2, directed, &[(0, 1, -1)]).unwrap();
        for q in [0.0, 0.1, 0.2] {
            tops.push(max_of(&eigenvalues(
                &build_laplacian(&g, LaplacianKind::signed_magnetic(true, q).unwrap()).unwrap(),
            )));
        }
    }
    let attains = tops.iter().all(|&t| t == 2.0);
    verdict(
        in_range && attains && checked > ENSEMBLE / 2,
        format!("spectrum within [{lo:.2e}, {hi:.15}] over {checked} graphs; negative edge top eigenvalues {tops:?}"),
    )
}

fn real_dense(op: &Operator) -> Array2<f64> {
    op.as_real().expect("real operator").to_dense()
}

/// q = 0 signed magnetic against the signed Laplacian of the symmetrized graph.
fn q_zero_reduction() -> Result<usize, String> {
    let mut rng = rng(3);
    let mut cases = 0;
    for trial in 0..50 {
        let n = rng.random_range(2..=12);
        let g = random_digraph(&mut rng, n, 0.3);
        for normalized in [false, true] {
            let g = if normalized {
                g.drop_isolated().0
            } else {
                g.clone()
            };
            if g.n_nodes() == 0 {
                continue;
            }
            let magnetic =
                build_laplacian(&g, LaplacianKind::signed_magnetic(normalized, 0.0).unwrap())
                    .unwrap();
            let signed =
                real_dense(&build_laplacian(&g, LaplacianKind::signed(normalized)).unwrap());
            let m = magnetic.to_dense_complex();
            if m.iter().any(|z| z.im != 0.0) || m.mapv(|z| z.re) != signed {
                return Err(format!(
                    "trial {trial} normalized={normalized}: q = 0 operator differs"
                ));
            }
            let gap = max_diff(&signed, &dense_signed_laplacian(&g, normalized));
            if gap > 1e-15 {
                return Err(format!(
                    "trial {trial}: signed Laplacian is {gap:.1e} from D̄ − A_s"
                ));
            }
            cases += 1;
        }
    }
    Ok(cases)
}

fn positive_reduction() -> Result<usize, String> {
    let mut rng = rng(4);
    let mut cases = 0;
    for trial in 0..50 {
        let n = rng.random_range(2..=16);
        let g = random_positive_graph(&mut rng, n, 0.3);
        for normalized in [false, true] {
            let g = if normalized {
                g.drop_isolated().0
            } else {
                g.clone()
            };
            if g.n_nodes() == 0 {
                continue;
            }
            let s = build_laplacian(&g, LaplacianKind::signed(normalized)).unwrap();
            let c = build_laplacian(&g, LaplacianKind::combinatorial(normalized)).unwrap();
            if s != c {
                return Err(format!(
                    "trial {trial} normalized={normalized}: signed differs from combinatorial"
                ));
            }
            cases += 1;
        }
    }
    Ok(cases)
}

/// `D̂^{-1/2}(A + I)D̂^{-1/2}` from the plain 0/1 adjacency.
fn gcn_operator(g: &SignedDiGraph) -> Array2<f64> {
    let n = g.n_nodes();
    let mut a = Array2::<f64>::eye(n);
    for e in g.edges() {
        a[[e.src, e.dst]] = 1.0;
        a[[e.dst, e.src]] = 1.0;
    }
    let d = a.sum_axis(Axis(1));
    Array2::from_shape_fn((n, n), |(i, j)| a[[i, j]] / d[i].sqrt() / d[j].sqrt())
}

fn gcn_reduction() -> Result<f64, String> {
    let mut rng = rng(5);
    let mut worst = 0.0f64;
    for trial in 0..20u64 {
        let n = rng.random_range(3..=8);
        let g = random_positive_graph(&mut rng, n, 0.5).drop_isolated().0;
        if g.n_nodes() < 2 {
            continue;
        }
        let n = g.n_nodes();
        let x = rand_mat(&mut rng, n, 4);
        let model = Model::new(model_config(ModelKind::Sgcn1, 2, 5), 4, 3).unwrap();
        let params = model.init_params(trial);
        let p = gcn_operator(&g);
        let expected = p
            .dot(&relu(p.dot(&x).dot(param(&params, "theta0"))))
            .dot(param(&params, "theta1"));
        let got = forward(&model, &g, &x, &params, ForwardOptions::eval());
        worst = worst.max(max_diff(&got, &expected));
    }
    if worst <= 1e-12 {
        Ok(worst)
    } else {
        Err(format!("sgcn1 is {worst:.1e} from the GCN operator"))
    }
}

pub fn reductions() -> Verdict {
    match (q_zero_reduction(), positive_reduction(), gcn_reduction()) {
        (Ok(a), Ok(b), Ok(c)) => Verdict::Pass(format!(
            "q = 0 exact on {a} operators, signed = combinatorial exact on {b}, sgcn1 vs GCN max diff {c:.1e}"
        )),
        (a, b, c) => Verdict::Fail([a.err(), b.err(), c.err()].into_iter().flatten().collect::<Vec<_>>().join("; ")),
    }
}
