use std::fmt;
use std::path::Path;

use spectra_core::graph::GraphError;
use spectra_core::linalg::LinalgError;
use spectra_core::models::ModelError;
use spectra_core::spectral::SpectralError;
use spectra_core::tasks::TaskError;

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Violation = 1,
    Parse = 2,
    Domain = 3,
    NonConvergence = 4,
    Divergence = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn new(exit: Exit, message: impl Into<String>) -> Self {
        Self {
            exit,
            message: message.into(),
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Self::new(Exit::Domain, message)
    }

    pub fn read(path: &Path, e: std::io::Error) -> Self {
        Self::new(Exit::Parse, format!("cannot read {}: {e}", path.display()))
    }

    pub fn write(path: &Path, e: std::io::Error) -> Self {
        Self::new(
            Exit::Domain,
            format!("cannot write {}: {e}", path.display()),
        )
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        let exit = match e {
            GraphError::Parse { .. } | GraphError::ZeroSign { .. } | GraphError::Io(_) => {
                Exit::Parse
            }
            _ => Exit::Domain,
        };
        Self::new(exit, e.to_string())
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        let exit = match e {
            LinalgError::NonConvergence { .. } => Exit::NonConvergence,
            _ => Exit::Domain,
        };
        Self::new(exit, e.to_string())
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::Linalg(e) => e.into(),
            e => Self::domain(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Spectral(e) => e.into(),
            ModelError::Autodiff(spectra_core::autodiff::AutodiffError::NonFiniteGradient(p)) => {
                Self::new(
                    Exit::Divergence,
                    format!("training diverged: non-finite gradient for {p}"),
                )
            }
            e => Self::domain(e.to_string()),
        }
    }
}

impl From<TaskError> for CliError {
    fn from(e: TaskError) -> Self {
        match e {
            TaskError::Parse(_) => Self::new(Exit::Parse, e.to_string()),
            TaskError::Io { .. } => Self::new(Exit::Parse, e.to_string()),
            TaskError::Graph(e) => e.into(),
            TaskError::Spectral(e) => e.into(),
            TaskError::Linalg(e) => e.into(),
            TaskError::Model(e) => e.into(),
            TaskError::Divergence { .. } => Self::new(Exit::Divergence, e.to_string()),
            e => Self::domain(e.to_string()),
        }
    }
}
