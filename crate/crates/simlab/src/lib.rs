//! Simulation lab for the corrected confidence region.
//!
//! * [`rng`] — deterministic per-replication streams and the data-generating
//!   process (truncated scaled `χ²₁` within-study variances, bivariate normal
//!   outcomes).
//! * [`oracle`] — Monte Carlo estimates of the correction moments and of
//!   region coverage, plus the coverage expansion used to cross-check `h`.
//! * [`grid`] — the `(τ², ρ, n)` scenario grid with CSV output.

pub mod error;
pub mod grid;
pub mod oracle;
pub mod rng;

pub use error::{Result, SimError};
pub use grid::{gen_dataset, run_grid, write_grid_csv, GridRecord, Scenario, CSV_HEADER};
pub use oracle::{
    check_b_star, expansion_coverage, mc_b_moments, mc_b_moments_with, mc_coverage, CoverageEstimate,
    MomentEstimate, OracleCheck, OracleConfig, SigmaSource,
};
pub use rng::{gen_within_variances, gen_within_variances_with, Truncation};
