//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("cannot normalize a zero-norm vector")]
    ZeroNorm,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("krum needs at least f + 3 inputs (m = {m}, f = {f})")]
    KrumTooFewInputs { m: usize, f: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
