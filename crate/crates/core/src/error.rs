use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("coefficient evaluation failed at step {step}: {detail}")]
    NonFinite { step: usize, detail: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.to_string(), reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
