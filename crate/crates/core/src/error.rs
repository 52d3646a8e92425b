use thiserror::Error;

/// Errors raised by data loading, configuration, and preconditions.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("ragged row at line {line}: expected {expected} cells, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("arity<2 in column {column}")]
    ArityTooSmall { column: usize },
    #[error("empty dataset")]
    Empty,
    #[error("target column must contain only 0 and 1")]
    BadTarget,
    #[error("datasets disagree on {0}")]
    Mismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{0}")]
    Config(String),
    #[error("transport solver: {0}")]
    Transport(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
