use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix not positive definite (failing pivot at index {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("parse error: {msg} at line {line}")]
    Parse { line: usize, msg: String },

    #[error("unsupported model version {0:?}")]
    Version(String),

    #[error("deserialize error: {0}")]
    Deserialize(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
