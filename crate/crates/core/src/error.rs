use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("adjacency is not symmetric at ({row}, {col}): {upper} vs {lower}")]
    Asymmetric {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },

    #[error("negative or non-finite value {value} at {location}")]
    BadValue { location: String, value: f64 },

    #[error("malformed graph file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("B is not embeddable: largest singular value {s_max} >= 1")]
    NotEmbeddable { s_max: f64 },

    #[error("matrix is not positive definite or is singular ({0})")]
    Singular(String),

    #[error("ill-conditioned covariance: condition number {0:e} exceeds 1e12")]
    IllConditioned(f64),

    #[error("resource guard: {0}")]
    ResourceGuard(String),

    #[error("no probability mass in the requested window")]
    ZeroMass,

    #[error("internal numerical error: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 3 for resource-guard trips, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ResourceGuard(_) => 3,
            _ => 2,
        }
    }
}
