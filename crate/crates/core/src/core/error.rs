use thiserror::Error;

/// Errors shared by every index family.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero vector has no angle")]
    ZeroVector,
    #[error("invalid vector: {0}")]
    InvalidVector(String),
    #[error("collection must hold at least one vector")]
    EmptyCollection,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point duplicates existing id {0}")]
    Duplicate(u32),
    #[error("index is empty")]
    EmptyIndex,
    #[error("io error: {0}")]
    Io(String),
    #[error("malformed data: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
