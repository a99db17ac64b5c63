//! Sparse and dense real/complex kernels: CSR products, Hermitian
//! eigendecomposition (dense and Lanczos) and randomized truncated SVD.

mod csr;
mod eig;
mod lanczos;
mod scalar;
mod svd;

use thiserror::Error;

pub use csr::{Csr, CsrComplexMatrix, CsrMatrix};
pub use eig::{
    conj_transpose, dense_hermitian_eig, dense_hermitian_eig_with, EigOptions, Spectrum,
};
pub use lanczos::{lanczos_extremal, lanczos_extremal_with, LanczosOptions, Which};
pub use scalar::Scalar;
pub use svd::{truncated_svd, truncated_svd_with, SvdOptions, TruncatedSvd};

pub type RealSpectrum = Spectrum<f64>;
pub type ComplexSpectrum = Spectrum<num_complex::Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("{op}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("entry ({row}, {col}) outside a {n_rows}x{n_cols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("matrix is not square: {n_rows}x{n_cols}")]
    NotSquare { n_rows: usize, n_cols: usize },
    #[error("matrix is not Hermitian (max deviation {max_deviation:e})")]
    NotHermitian { max_deviation: f64 },
    #[error("dimension {n} exceeds the dense eigensolver cap of {cap}")]
    DimensionOverCap { n: usize, cap: usize },
    #[error("eigensolver did not converge after {iterations} iterations (best residual {best_residual:e})")]
    NonConvergence {
        best_residual: f64,
        iterations: usize,
    },
    #[error("{0}")]
    InvalidArgument(String),
}
