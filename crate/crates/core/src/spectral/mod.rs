//! Laplacians of signed and directed graphs and the spectral tools built on them.

mod analysis;
mod cluster;
mod laplacian;
mod verify;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::LinalgError;

pub use analysis::{gft, igft, spectral_filter_apply, tv_l1, tv_quadratic, FilterResponse};
pub use cluster::{adjusted_rand_index, kmeans, magnetic_cluster, ClusterResult, KMEANS_RESTARTS};
pub use laplacian::{
    build_laplacian, pass_filters, renormalized_propagation, Operator, OperatorSpectrum,
};
pub use verify::{
    verify_eig_range, verify_operator_psd, verify_operator_range, verify_psd, PsdReport,
    RangeReport, PROPERTY_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Combinatorial,
    Signed,
    Magnetic,
    SignedMagnetic,
}

impl Family {
    pub fn is_magnetic(self) -> bool {
        matches!(self, Family::Magnetic | Family::SignedMagnetic)
    }

    /// Exclusive upper bound on the phase parameter.
    pub fn q_limit(self) -> Option<f64> {
        match self {
            Family::Magnetic => Some(0.5),
            Family::SignedMagnetic => Some(0.25),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Combinatorial => "combinatorial",
            Family::Signed => "signed",
            Family::Magnetic => "magnetic",
            Family::SignedMagnetic => "signed-magnetic",
        }
    }
}

/// Which Laplacian to build.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplacianKind {
    family: Family,
    normalized: bool,
    q: Option<f64>,
}

impl LaplacianKind {
    pub fn new(family: Family, normalized: bool, q: Option<f64>) -> Result<Self, SpectralError> {
        match (family.q_limit(), q) {
            (Some(limit), Some(q)) => {
                if !(0.0..limit).contains(&q) {
                    return Err(SpectralError::QOutOfRange {
                        family: family.name(),
                        q,
                        limit,
                    });
                }
            }
            (Some(_), None) => return Err(SpectralError::MissingQ(family.name())),
            (None, Some(_)) => return Err(SpectralError::UnexpectedQ(family.name())),
            (None, None) => {}
        }
        Ok(Self {
            family,
            normalized,
            q,
        })
    }

    pub fn combinatorial(normalized: bool) -> Self {
        Self {
            family: Family::Combinatorial,
            normalized,
            q: None,
        }
    }

    pub fn signed(normalized: bool) -> Self {
        Self {
            family: Family::Signed,
            normalized,
            q: None,
        }
    }

    pub fn magnetic(normalized: bool, q: f64) -> Result<Self, SpectralError> {
        Self::new(Family::Magnetic, normalized, Some(q))
    }

    pub fn signed_magnetic(normalized: bool, q: f64) -> Result<Self, SpectralError> {
        Self::new(Family::SignedMagnetic, normalized, Some(q))
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn q(&self) -> Option<f64> {
        self.q
    }
}

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("q = {q} is outside [0, {limit}) for the {family} Laplacian")]
    QOutOfRange {
        family: &'static str,
        q: f64,
        limit: f64,
    },
    #[error("the {0} Laplacian needs a phase parameter q")]
    MissingQ(&'static str),
    #[error("the {0} Laplacian takes no phase parameter")]
    UnexpectedQ(&'static str),
    #[error("node {id} (index {node}) has zero degree; normalized operators need every node connected (drop isolated nodes first)")]
    ZeroDegree { node: usize, id: String },
    #[error("node {id} (index {node}) has non-positive degree {degree}; the normalized combinatorial Laplacian is undefined")]
    NonPositiveDegree {
        node: usize,
        id: String,
        degree: f64,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
