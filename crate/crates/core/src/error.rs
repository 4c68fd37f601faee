use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },

    #[error("dataset annihilated by filtering: no interactions survive min_count = {min_count}")]
    Annihilated { min_count: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("corrupt model file: {0}")]
    Corrupt(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("no negative item available for user {user}: the user has interacted with the whole catalog")]
    NoNegative { user: usize },

    #[error("parameter constraint violated at iteration {iteration}: {reason}")]
    Constraint { iteration: usize, reason: String },

    #[error("non-finite parameter detected at iteration {iteration} in block `{block}`")]
    NonFinite { iteration: usize, block: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Numerical failures are reported with a distinct exit status by the CLI.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::Constraint { .. })
    }
}
