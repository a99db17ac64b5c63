//! Randomized truncated SVD of a sparse real matrix.

use log::warn;
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{dense_hermitian_eig, CsrMatrix, LinalgError};

const OVERSAMPLING: usize = 10;

/// Convergence controls for [`truncated_svd_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdOptions {
    pub power_iterations: usize,
    /// Subspace iteration stops once the top-`d` values move by at most this
    /// much, relative.
    pub refine_tol: f64,
    pub max_refinements: usize,
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self {
            power_iterations: 2,
            refine_tol: 1e-13,
            max_refinements: 200,
        }
    }
}

impl SvdOptions {
    /// Looser settings for feature extraction, where the embedding matters
    /// and the last digits of the singular values do not.
    pub fn features() -> Self {
        Self {
            power_iterations: 4,
            refine_tol: 1e-6,
            max_refinements: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `U_d Σ_d`, one row per matrix row.
    pub features: Array2<f64>,
    /// Top singular values, descending; zero for columns past the rank.
    pub singular_values: Array1<f64>,
    /// Number of trailing columns that were zero-filled.
    pub zero_filled: usize,
}

/// Top-`d` left singular vectors scaled by their singular values.
///
/// A Gaussian sketch with oversampling 10 and two power iterations seeds the
/// range; subspace iteration then continues until the top-`d` values settle.
/// Columns are sign-normalised so that each column's largest-magnitude entry
/// is positive.
pub fn truncated_svd(m: &CsrMatrix, d: usize, seed: u64) -> Result<TruncatedSvd, LinalgError> {
    truncated_svd_with(m, d, seed, &SvdOptions::default())
}

pub fn truncated_svd_with(
    m: &CsrMatrix,
    d: usize,
    seed: u64,
    opts: &SvdOptions,
) -> Result<TruncatedSvd, LinalgError> {
    let (rows, cols) = m.shape();
    let limit = rows.min(cols);
    if d > limit {
        return Err(LinalgError::InvalidArgument(format!(
            "truncated SVD of dimension {d} exceeds min({rows}, {cols})"
        )));
    }
    if d == 0 {
        return Ok(TruncatedSvd {
            features: Array2::zeros((rows, 0)),
            singular_values: Array1::zeros(0),
            zero_filled: 0,
        });
    }
    let width = (d + OVERSAMPLING).min(limit);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = Array2::from_shape_fn((cols, width), |_| StandardNormal.sample(&mut rng));

    let mut q = orthonormalize(m.mul_dense(&omega.view())?);
    for _ in 0..opts.power_iterations {
        q = power_step(m, &q)?;
    }

    let mut prev: Option<Array1<f64>> = None;
    let mut sketch;
    let mut refinements = 0;
    loop {
        sketch = project(m, &q)?;
        let top = sketch.values.slice(ndarray::s![..d]).to_owned();
        let settled = match &prev {
            Some(p) => {
                let scale = top[0].max(f64::MIN_POSITIVE);
                top.iter()
                    .zip(p.iter())
                    .all(|(a, b)| (a - b).abs() <= opts.refine_tol * scale.max(a.abs()))
            }
            None => width == limit,
        };
        if settled || refinements >= opts.max_refinements {
            break;
        }
        prev = Some(top);
        q = power_step(m, &q)?;
        refinements += 1;
    }

    let sigma_max = sketch.values[0];
    let mut features = Array2::zeros((rows, d));
    let mut singular_values = Array1::zeros(d);
    let mut zero_filled = 0;
    for c in 0..d {
        let s = sketch.values[c];
        if s <= 1e-12 * sigma_max || s == 0.0 {
            zero_filled += 1;
            continue;
        }
        singular_values[c] = s;
        let u = q.dot(&sketch.left.column(c));
        let pivot = u.iter().copied().fold(
            0.0f64,
            |best, x| if x.abs() > best.abs() { x } else { best },
        );
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        features.column_mut(c).assign(&(u * (sign * s)));
    }
    if zero_filled > 0 {
        warn!("truncated SVD: requested {d} components but only {} are numerically non-zero; zero-filling", d - zero_filled);
    }
    Ok(TruncatedSvd {
        features,
        singular_values,
        zero_filled,
    })
}

struct Projection {
    values: Array1<f64>,
    left: Array2<f64>,
}

/// SVD of the small matrix `B = Qᵀ M` through the eigenpairs of `B Bᵀ`.
fn project(m: &CsrMatrix, q: &Array2<f64>) -> Result<Projection, LinalgError> {
    let bt = m.mul_dense_transposed(&q.view())?; // Mᵀ Q = Bᵀ
    let gram = bt.t().dot(&bt);
    let spec = dense_hermitian_eig(&gram.view())?;
    let w = spec.len();
    let values = Array1::from_iter((0..w).rev().map(|i| spec.eigenvalues[i].max(0.0).sqrt()));
    let mut left = Array2::zeros((w, w));
    for (c, i) in (0..w).rev().enumerate() {
        left.column_mut(c).assign(&spec.eigenvectors.column(i));
    }
    Ok(Projection { values, left })
}

fn power_step(m: &CsrMatrix, q: &Array2<f64>) -> Result<Array2<f64>, LinalgError> {
    let z = orthonormalize(m.mul_dense_transposed(&q.view())?);
    Ok(orthonormalize(m.mul_dense(&z.view())?))
}

/// Modified Gram–Schmidt, applied twice; numerically dependent columns are zeroed.
fn orthonormalize(y: Array2<f64>) -> Array2<f64> {
    let (rows, cols) = y.dim();
    let scale = y
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    // Columns of `y` become contiguous rows of `yt`.
    let mut yt = y.t().as_standard_layout().into_owned();
    let data = yt.as_slice_mut().expect("standard layout");
    for c in 0..cols {
        let (done, rest) = data.split_at_mut(c * rows);
        let col = &mut rest[..rows];
        for _ in 0..2 {
            for p in done.chunks_exact(rows) {
                let proj: f64 = p.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                col.iter_mut().zip(p).for_each(|(v, a)| *v -= proj * a);
            }
        }
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-13 * scale {
            col.fill(0.0);
        } else {
            col.iter_mut().for_each(|v| *v /= norm);
        }
    }
    yt.reversed_axes().as_standard_layout().into_owned()
}
