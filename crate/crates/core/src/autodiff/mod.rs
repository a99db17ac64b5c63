//! Reverse-mode differentiation over dense real matrices.
//!
//! A [`Tape`] records every operation as it is evaluated; [`Tape::backward`]
//! walks the record in reverse and accumulates gradients by summation.
//! Complex quantities are carried as separate real and imaginary tensors.

mod adam;
mod check;
mod params;
mod tape;

use thiserror::Error;

pub use adam::{Adam, AdamConfig};
pub use check::{grad_check, relative_error};
pub use params::{Gradients, Parameters};
pub use tape::{sigmoid, Bound, Tape, Var};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("backward called twice on the same tape without zero_grad")]
    BackwardTwice,
    #[error("backward needs a 1x1 loss, got {0:?}")]
    NonScalarLoss((usize, usize)),
    #[error("non-finite gradient for parameter {0}")]
    NonFiniteGradient(String),
    #[error("index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown parameter {0}")]
    UnknownParameter(String),
}
