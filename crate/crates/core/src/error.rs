use thiserror::Error;

use crate::linalg::Sym2;

pub type Result<T> = std::result::Result<T, DtaError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DtaError {
    #[error("value {0} is outside the open interval (0, 1)")]
    ProbabilityDomain(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid study {id:?}: {reason}")]
    InvalidStudy { id: String, reason: String },

    #[error("need at least {required} studies, got {actual}")]
    TooFewStudies { required: usize, actual: usize },

    #[error("matrix is singular: {0:?}")]
    Singular(Sym2),

    #[error("matrix is not positive definite: {0:?}")]
    NotPositiveDefinite(Sym2),

    #[error("matrix is not positive semi-definite: {0:?}")]
    NotPsd(Sym2),

    #[error("degenerate dataset: {0}")]
    Degenerate(String),

    #[error("the corrected region is undefined because 1 + h = {0} is not positive")]
    UndefinedRegion(f64),

    #[error("the corrected region requires the bias-corrected moment estimator")]
    CorrectionNeedsMomentEstimator,
}
