//! Bivariate random-effects meta-analysis of diagnostic test accuracy.
//!
//! Each study contributes a logit (sensitivity, specificity) pair `y_i` with
//! known within-study covariance `S_i`; the true pairs scatter around the
//! summary point `β` with between-study covariance `Σ`. This crate estimates
//! `β` and `Σ` and builds two confidence regions for `β`:
//!
//! * the naive Wald region with the `χ²₂` threshold, and
//! * a corrected region whose threshold is inflated by `1 + h`, where `h`
//!   cancels the `O(n⁻¹)` coverage error caused by estimating `Σ`.
//!
//! The corrected region needs an estimator of `Σ` that is even, translation
//! invariant, second-order unbiased and a function of OLS residuals only; the
//! bias-corrected moment estimator in [`estimate`] is such an estimator.

pub mod bterms;
pub mod chi2;
pub mod error;
pub mod estimate;
pub mod hetero;
pub mod linalg;
pub mod optim;
pub mod region;
pub mod sroc;
pub mod study;

pub use bterms::{b_star, b_star_from_within, h_adjust, BTerms};
pub use chi2::chi2_quantile;
pub use error::{DtaError, Result};
pub use estimate::{
    bias_corrected_sigma, bias_corrected_sigma_unprojected, gls_beta, moment_sigma0, ols_beta, reml_sigma,
    v_matrix, Estimator, RemlFit,
};
pub use hetero::i_squared;
pub use linalg::{Mat2, Sym2, Vec2};
pub use region::{
    confidence_region, fit, region_boundary, region_contains, ConfidenceRegion, FitResult, Method, Warning,
};
pub use sroc::{sroc_curve, to_roc_space};
pub use study::{expit, logit, summarize_counts, Dataset, Study};
