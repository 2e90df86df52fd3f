use chrono::{DateTime, Utc};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("schema error in {file} at row {row}: {message}")]
    Schema {
        file: String,
        row: usize,
        message: String,
    },

    #[error("data gap: expected a record at {0}")]
    Gap(DateTime<Utc>),

    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(DateTime<Utc>),

    #[error("missing day: {0}")]
    MissingDay(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("solver stopped at the node limit without a feasible solution")]
    SolverLimit,

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
