use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("target unobservable: {0}")]
    Unobservable(String),

    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate feature: {0}")]
    DegenerateFeature(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("constraint violation: {0}")]
    Constraint(String),

    #[error("problem size {size} exceeds exhaustive-search limit {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied configuration rather than the run itself.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
