use std::path::PathBuf;

use thiserror::Error;

use crate::conic::SolveStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The constraint set of a design problem is empty.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The conic solver did not return an optimal point.
    #[error("solver failed ({status:?}) after {iterations} iterations: {context}")]
    Solver {
        status: SolveStatus,
        iterations: usize,
        context: String,
    },

    #[error("rank-one extraction refused: residual {residual:e} exceeds {tolerance:e}")]
    Extraction { residual: f64, tolerance: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
