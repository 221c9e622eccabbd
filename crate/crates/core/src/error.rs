use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty distribution")]
    EmptyDistribution,

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("shape mismatch for {name}: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("empty source sentence")]
    EmptySource,

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("graph already consumed by backward; run a new forward pass")]
    GraphConsumed,

    #[error("missing gradient for parameter {0}")]
    MissingGradient(String),

    #[error("unknown parameter {0}")]
    UnknownParameter(String),

    #[error("stale decoder state: produced at step {state_step}, used at step {step}")]
    StaleState { state_step: usize, step: usize },

    #[error("misaligned suffix {suffix:?} attached to non-final fragment {fragment:?}")]
    MisalignedSuffix { fragment: String, suffix: String },

    #[error("grammar too small: {0}")]
    GrammarTooSmall(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    File { path: String, source: io::Error },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(path: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }
}

/// Wraps an I/O error with the file it concerns.
pub fn file_error(path: impl AsRef<std::path::Path>) -> impl FnOnce(io::Error) -> Error {
    let path = path.as_ref().display().to_string();
    move |source| Error::File { path, source }
}

pub type Result<T> = std::result::Result<T, Error>;
