//! Lanczos iteration for a few extremal eigenpairs of a sparse Hermitian matrix.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eig::tridiagonal_ql;
use super::{Csr, LinalgError, Scalar, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Smallest,
    Largest,
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Krylov steps before giving up; `None` means `10·k + 200`.
    pub max_iter: Option<usize>,
    /// Residual bound relative to `‖M‖_F`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_iter: None,
            tol: 1e-8,
            seed: 0x5eed_1a2c,
        }
    }
}

pub fn lanczos_extremal<S: Scalar>(
    m: &Csr<S>,
    k: usize,
    which: Which,
) -> Result<Spectrum<S>, LinalgError> {
    lanczos_extremal_with(m, k, which, &LanczosOptions::default())
}

pub fn lanczos_extremal_with<S: Scalar>(
    m: &Csr<S>,
    k: usize,
    which: Which,
    opts: &LanczosOptions,
) -> Result<Spectrum<S>, LinalgError> {
    let (n, c) = m.shape();
    if n != c {
        return Err(LinalgError::NotSquare {
            n_rows: n,
            n_cols: c,
        });
    }
    if k > n {
        return Err(LinalgError::InvalidArgument(format!(
            "requested {k} eigenpairs of a {n}x{n} matrix"
        )));
    }
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let dev = m.hermitian_deviation();
    if dev > 1e-12 * scale.max(1.0) {
        return Err(LinalgError::NotHermitian { max_deviation: dev });
    }
    if k == 0 {
        return Ok(Spectrum {
            eigenvalues: Array1::zeros(0),
            eigenvectors: Array2::zeros((n, 0)),
            residual_norm: 0.0,
        });
    }
    let bound = opts.tol * scale;
    let max_iter = opts.max_iter.unwrap_or(10 * k + 200);
    let min_dim = n.min((2 * k).max(k + 20));
    let breakdown = 1e-12 * scale.max(1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Array1<S>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut best_residual = f64::INFINITY;

    let mut v = random_unit_orthogonal(n, &basis, &mut rng);
    for step in 0..max_iter.max(1) {
        let mut w = m.mul_vec(&v.view())?;
        let alpha: f64 = v
            .iter()
            .zip(w.iter())
            .map(|(a, b)| (a.conj() * *b).re())
            .sum();
        basis.push(v);
        alphas.push(alpha);
        // Full reorthogonalization, applied twice.
        for _ in 0..2 {
            for b in &basis {
                let proj = inner(b, &w);
                w.zip_mut_with(b, |wi, bi| *wi = *wi - *bi * proj);
            }
        }
        let beta = norm(&w);
        let dim = basis.len();

        let exhausted = dim == n;
        if dim >= min_dim || exhausted || step + 1 == max_iter {
            let (values, last) = ritz_last_components(&alphas, &betas);
            let wanted = select(&values, k, which);
            let estimate = wanted
                .iter()
                .map(|&i| (beta * last[i]).abs())
                .fold(0.0, f64::max);
            if wanted.len() == k && (estimate <= bound || exhausted) {
                let spec = ritz_pairs(m, &basis, &alphas, &betas, k, which)?;
                best_residual = best_residual.min(spec.residual_norm);
                if spec.residual_norm <= bound {
                    return Ok(spec);
                }
                if exhausted {
                    break;
                }
            }
        }
        if exhausted {
            break;
        }

        if beta <= breakdown {
            // Invariant subspace found: restart from a fresh direction.
            betas.push(0.0);
            v = random_unit_orthogonal(n, &basis, &mut rng);
        } else {
            betas.push(beta);
            v = w.mapv(|x| x.scale(1.0 / beta));
        }
    }
    if best_residual.is_infinite() && basis.len() >= k {
        best_residual = ritz_pairs(m, &basis, &alphas, &betas, k, which)?.residual_norm;
    }
    Err(LinalgError::NonConvergence {
        best_residual,
        iterations: basis.len(),
    })
}

fn inner<S: Scalar>(a: &Array1<S>, b: &Array1<S>) -> S {
    a.iter()
        .zip(b.iter())
        .fold(S::zero(), |acc, (x, y)| acc + x.conj() * *y)
}

fn norm<S: Scalar>(a: &Array1<S>) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn random_unit_orthogonal<S: Scalar>(
    n: usize,
    basis: &[Array1<S>],
    rng: &mut ChaCha8Rng,
) -> Array1<S> {
    loop {
        let mut v: Array1<S> = Array1::from_shape_fn(n, |_| {
            S::from_parts(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        for _ in 0..2 {
            for b in basis {
                let proj = inner(b, &v);
                v.zip_mut_with(b, |vi, bi| *vi = *vi - *bi * proj);
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            return v.mapv(|x| x.scale(1.0 / nv));
        }
    }
}

/// Ritz values of the current tridiagonal and the last component of each
/// Ritz vector (in Krylov coordinates).
fn ritz_last_components(alphas: &[f64], betas: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let j = alphas.len();
    let mut d = alphas.to_vec();
    let mut e = vec![0.0; j];
    e[..j - 1].copy_from_slice(&betas[..j - 1]);
    let mut row = Array2::<f64>::zeros((1, j));
    row[[0, j - 1]] = 1.0;
    if tridiagonal_ql(&mut d, &mut e, &mut row).is_err() {
        return (d, vec![f64::INFINITY; j]);
    }
    (d, row.row(0).to_vec())
}

fn select(values: &[f64], k: usize, which: Which) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    match which {
        Which::Smallest => idx.into_iter().take(k).collect(),
        Which::Largest => idx.into_iter().rev().take(k).collect(),
    }
}

fn ritz_pairs<S: Scalar>(
    m: &Csr<S>,
    basis: &[Array1<S>],
    alphas: &[f64],
    betas: &[f64],
    k: usize,
    which: Which,
) -> Result<Spectrum<S>, LinalgError> {
    let j = alphas.len();
    let n = m.n_rows();
    let mut d = alphas.to_vec();
    let mut e = vec![0.0; j];
    e[..j - 1].copy_from_slice(&betas[..j - 1]);
    let mut z = Array2::<f64>::eye(j);
    tridiagonal_ql(&mut d, &mut e, &mut z)?;
    let mut chosen = select(&d, k, which);
    chosen.sort_by(|&a, &b| d[a].total_cmp(&d[b]));

    let mut vectors = Array2::<S>::zeros((n, k));
    for (col, &ci) in chosen.iter().enumerate() {
        let mut target = vectors.column_mut(col);
        for (bi, b) in basis.iter().enumerate() {
            let coeff = z[[bi, ci]];
            if coeff != 0.0 {
                target.zip_mut_with(b, |t, x| *t = *t + x.scale(coeff));
            }
        }
    }
    let eigenvalues = Array1::from_iter(chosen.iter().map(|&i| d[i]));
    let mv = m.mul_dense(&vectors.view())?;
    let mut residual_norm = 0.0f64;
    for (c, &lam) in eigenvalues.iter().enumerate() {
        let r: f64 = mv
            .column(c)
            .iter()
            .zip(vectors.column(c).iter())
            .map(|(&a, &b)| (a - b.scale(lam)).norm_sqr())
            .sum();
        residual_norm = residual_norm.max(r.sqrt());
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: vectors,
        residual_norm,
    })
}
