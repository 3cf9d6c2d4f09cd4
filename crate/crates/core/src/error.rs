use std::path::PathBuf;
use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("zero vector where a nonzero point is required ({context})")]
    ZeroVector { context: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("instance too large for enumeration: n={n}, k={k} (guard n <= {max_n}, k <= {max_k})")]
    TooLarge {
        n: usize,
        k: usize,
        max_n: usize,
        max_k: usize,
    },

    #[error("barrier lost positive definiteness at iteration {iteration}")]
    BarrierBreakdown { iteration: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("reducer failed at floor {floor}, node {node}: {source}")]
    Reducer {
        floor: usize,
        node: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
