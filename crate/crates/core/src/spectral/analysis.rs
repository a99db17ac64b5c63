use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use super::SpectralError;
use crate::linalg::{Csr, Scalar, Spectrum};

/// Spectral response `ĝ(λ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterResponse {
    /// `2 − λ`
    LowPass2MinusLambda,
    /// `λ`
    HighPassLambda,
    /// `1 − |λ| / |λ|_max`
    AbsNormalized { lambda_max: f64 },
    /// `Σ θ_i λ^i`
    Polynomial { coefficients: Vec<f64> },
}

impl FilterResponse {
    pub fn evaluate(&self, lambda: f64) -> Result<f64, SpectralError> {
        Ok(match self {
            FilterResponse::LowPass2MinusLambda => 2.0 - lambda,
            FilterResponse::HighPassLambda => lambda,
            FilterResponse::AbsNormalized { lambda_max } => {
                if lambda_max.is_nan() || *lambda_max <= 0.0 {
                    return Err(SpectralError::InvalidArgument(format!(
                        "lambda_max must be positive, got {lambda_max}"
                    )));
                }
                1.0 - lambda.abs() / lambda_max
            }
            FilterResponse::Polynomial { coefficients } => coefficients
                .iter()
                .rev()
                .fold(0.0, |acc, &c| acc * lambda + c),
        })
    }

    /// Polynomial order; zero for the fixed responses of order ≤ 1 except
    /// the non-polynomial `AbsNormalized`, which reports `None`.
    pub fn order(&self) -> Option<usize> {
        match self {
            FilterResponse::LowPass2MinusLambda | FilterResponse::HighPassLambda => Some(1),
            FilterResponse::AbsNormalized { .. } => None,
            FilterResponse::Polynomial { coefficients } => {
                Some(coefficients.len().saturating_sub(1))
            }
        }
    }
}

fn check_dim<S>(spec: &Spectrum<S>, len: usize) -> Result<(), SpectralError> {
    let n = spec.eigenvectors.nrows();
    if n != len {
        return Err(SpectralError::DimensionMismatch {
            expected: n,
            found: len,
        });
    }
    Ok(())
}

/// `x̂ = U† x`.
pub fn gft<S: Scalar>(spec: &Spectrum<S>, x: &ArrayView1<S>) -> Result<Array1<S>, SpectralError> {
    check_dim(spec, x.len())?;
    let u = &spec.eigenvectors;
    Ok(Array1::from_iter((0..u.ncols()).map(|k| {
        u.column(k)
            .iter()
            .zip(x.iter())
            .fold(S::zero(), |acc, (a, b)| acc + a.conj() * *b)
    })))
}

/// `x = U x̂`.
pub fn igft<S: Scalar>(
    spec: &Spectrum<S>,
    coeffs: &ArrayView1<S>,
) -> Result<Array1<S>, SpectralError> {
    let k = spec.eigenvectors.ncols();
    if coeffs.len() != k {
        return Err(SpectralError::DimensionMismatch {
            expected: k,
            found: coeffs.len(),
        });
    }
    Ok(spec.eigenvectors.dot(coeffs))
}

/// `U diag(ĝ(λ)) U† x`.
pub fn spectral_filter_apply<S: Scalar>(
    spec: &Spectrum<S>,
    resp: &FilterResponse,
    x: &ArrayView1<S>,
) -> Result<Array1<S>, SpectralError> {
    let mut coeffs = gft(spec, x)?;
    for (c, &lambda) in coeffs.iter_mut().zip(spec.eigenvalues.iter()) {
        *c = c.scale(resp.evaluate(lambda)?);
    }
    igft(spec, &coeffs.view())
}

/// Quadratic total variation `Re(x† L x)`.
pub fn tv_quadratic<S: Scalar>(l: &Csr<S>, x: &ArrayView1<S>) -> Result<f64, SpectralError> {
    let lx = l.mul_vec(x)?;
    Ok(x.iter()
        .zip(lx.iter())
        .map(|(a, b)| (a.conj() * *b).re())
        .sum())
}

/// ℓ1 total variation `‖L x‖₁`.
pub fn tv_l1<S: Scalar>(l: &Csr<S>, x: &ArrayView1<S>) -> Result<f64, SpectralError> {
    Ok(l.mul_vec(x)?.iter().map(|v| v.modulus()).sum())
}
