use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("training data must contain both classes")]
    SingleClass,

    #[error("non-finite feature value in example {example}, column {column}")]
    NonFiniteFeature { example: usize, column: usize },

    #[error("feature family {0} is enabled but its vectorizer is not fitted")]
    UnfittedVectorizer(&'static str),

    #[error("model file {path}: {reason}")]
    ModelFormat { path: PathBuf, reason: String },

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("model file not found: {0}")]
    MissingModel(PathBuf),

    #[error("another batch run holds the lock at {0}")]
    RunLocked(PathBuf),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("fetch failed for {url}: {reason}")]
    Fetch { url: String, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
