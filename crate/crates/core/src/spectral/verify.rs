use serde::Serialize;

use super::{build_laplacian, LaplacianKind, Operator, SpectralError};
use crate::graph::SignedDiGraph;

/// Slack allowed on both proposition checks; matches the eigensolver contract.
pub const PROPERTY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RangeReport {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub pass: bool,
}

pub fn verify_operator_psd(op: &Operator) -> Result<PsdReport, SpectralError> {
    let (lo, _) = op.extreme_eigenvalues()?;
    Ok(PsdReport {
        min_eigenvalue: lo,
        pass: lo >= -PROPERTY_TOL,
    })
}

pub fn verify_operator_range(op: &Operator) -> Result<RangeReport, SpectralError> {
    let (lo, hi) = op.extreme_eigenvalues()?;
    Ok(RangeReport {
        min_eigenvalue: lo,
        max_eigenvalue: hi,
        pass: lo >= -PROPERTY_TOL && hi <= 2.0 + PROPERTY_TOL,
    })
}

/// Positive semidefiniteness of the Laplacian `kind` of `g`.
///
/// A failing report is a finding, not an error; errors only come from
/// building the operator or from the eigensolver.
pub fn verify_psd(g: &SignedDiGraph, kind: LaplacianKind) -> Result<PsdReport, SpectralError> {
    verify_operator_psd(&build_laplacian(g, kind)?)
}

/// Spectrum of a normalized Laplacian lies in `[0, 2]`.
pub fn verify_eig_range(
    g: &SignedDiGraph,
    kind: LaplacianKind,
) -> Result<RangeReport, SpectralError> {
    if !kind.normalized() {
        return Err(SpectralError::InvalidArgument(
            "the [0, 2] range check applies to normalized Laplacians only".into(),
        ));
    }
    verify_operator_range(&build_laplacian(g, kind)?)
}
