use std::path::PathBuf;

use dta_core::DtaError;
use dta_simlab::SimError;
use thiserror::Error;

use crate::input::InputError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: InputError },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] DtaError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("validation failed: {0}")]
    Validation(String),
}

pub mod exit {
    pub const FAILURE: i32 = 1;
    pub const BAD_INPUT: i32 = 2;
    pub const TOO_FEW_STUDIES: i32 = 3;
    pub const UNDEFINED_REGION: i32 = 4;
}

fn model_code(e: &DtaError) -> i32 {
    match e {
        DtaError::TooFewStudies { .. } => exit::TOO_FEW_STUDIES,
        DtaError::UndefinedRegion(_) => exit::UNDEFINED_REGION,
        DtaError::InvalidStudy { .. } | DtaError::InvalidArgument(_) => exit::BAD_INPUT,
        _ => exit::FAILURE,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input { .. } | CliError::Read { .. } | CliError::Usage(_) => exit::BAD_INPUT,
            CliError::Model(e) => model_code(e),
            CliError::Sim(SimError::Core(e)) => model_code(e),
            CliError::Sim(SimError::InvalidConfig(_)) => exit::BAD_INPUT,
            CliError::Sim(_) | CliError::Write { .. } | CliError::Validation(_) => exit::FAILURE,
        }
    }
}
