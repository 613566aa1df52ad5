use dta_core::DtaError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] DtaError),

    #[error("truncated variance draw rejected {0} times in a row")]
    RejectionExhausted(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
