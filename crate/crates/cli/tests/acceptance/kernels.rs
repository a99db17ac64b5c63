use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use spectra_core::linalg::{dense_hermitian_eig, truncated_svd, CsrMatrix};
use spectra_core::rng::StreamRng;

use crate::oracles::rng;
use crate::{verdict, Verdict};

const BOUND: f64 = 1e-8;

fn random_hermitian(rng: &mut StreamRng, n: usize) -> Array2<Complex64> {
    let mut m = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        m[[i, i]] = Complex64::new(rng.random::<f64>() * 4.0 - 2.0, 0.0);
        for j in (i + 1)..n {
            let z = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            m[[i, j]] = z;
            m[[j, i]] = z.conj();
        }
    }
    m
}

fn random_matrix(rng: &mut StreamRng, rows: usize, cols: usize, density: f64) -> CsrMatrix {
    let mut trip = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if rng.random::<f64>() < density {
                trip.push((i, j, rng.random::<f64>() * 2.0 - 1.0));
            }
        }
    }
    CsrMatrix::from_triplets(rows, cols, trip).unwrap()
}

/// Largest `‖Hv − λv‖` and `|V†V − I|` over 500 matrices of size 1 to 40.
fn eig_bounds() -> (f64, f64) {
    let mut rng = rng(99);
    let (mut residual, mut ortho) = (0.0f64, 0.0f64);
    for trial in 0..500 {
        let n = 1 + trial % 40;
        let h = random_hermitian(&mut rng, n);
        let spec = dense_hermitian_eig(&h.view()).unwrap();
        let v = &spec.eigenvectors;
        for k in 0..n {
            let col = v.column(k);
            let r = h.dot(&col) - col.mapv(|z| z * spec.eigenvalues[k]);
            residual = residual.max(r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
        }
        ortho = ortho.max(spec.orthonormality_error());
    }
    (residual, ortho)
}

/// Largest relative error of the top singular values over 50 matrices.
fn svd_error() -> f64 {
    let mut rng = rng(2024);
    let mut worst = 0.0f64;
    for trial in 0..50u64 {
        let rows = rng.random_range(30..=80);
        let cols = rng.random_range(20..=60);
        let density = if trial % 2 == 0 { 0.3 } else { 1.0 };
        let m = random_matrix(&mut rng, rows, cols, density);
        let d = rng.random_range(1..=10);
        let out = truncated_svd(&m, d, trial).unwrap();
        let dense = m.to_dense();
        let oracle = DMatrix::from_fn(rows, cols, |i, j| dense[[i, j]]).svd(false, false);
        let mut sv: Vec<f64> = oracle.singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        for (got, want) in out.singular_values.iter().zip(&sv[..d]) {
            worst = worst.max((got - want).abs() / want);
        }
    }
    worst
}

pub fn kernels() -> Verdict {
    let (residual, ortho) = eig_bounds();
    let svd = svd_error();
    verdict(
        residual <= BOUND && ortho <= BOUND && svd <= 1e-6,
        format!("eig residual {residual:.1e}, orthonormality {ortho:.1e} (500 matrices); SVD relative error {svd:.1e} (50 matrices)"),
    )
}
