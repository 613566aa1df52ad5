//! Brute-force Monte Carlo counterparts of the analytic correction terms.
//!
//! The `B*` formulas and the adjustment `h` in `dta_core` are closed-form
//! approximations to expectations over the sampling distribution of `Σ̂`.
//! This module estimates those expectations directly by simulation, with the
//! within-study design held fixed, so the two routes can be compared.

use dta_core::chi2;
use dta_core::{
    b_star_from_within, bias_corrected_sigma, fit, v_matrix, BTerms, Dataset, Estimator, Mat2, Method, Sym2,
    Vec2,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SimError};
use crate::rng::{draw_outcomes, gen_within_variances, stream};

/// Minimum replication count for moment estimation.
pub const MIN_MOMENT_REPS: usize = 1000;

/// Simulation design for the oracles: true `Σ`, frozen within-study
/// variances, replication count and seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleConfig {
    pub n: usize,
    pub sigma_true: Sym2,
    pub within_vars: Vec<Vec2>,
    pub reps: usize,
    pub seed: u64,
    /// Estimator behind the naive region in coverage runs.
    pub ncr_estimator: Estimator,
}

impl OracleConfig {
    pub fn new(sigma_true: Sym2, within_vars: Vec<Vec2>, reps: usize, seed: u64) -> Result<Self> {
        if within_vars.is_empty() {
            return Err(SimError::InvalidConfig("empty within-study design".into()));
        }
        if !within_vars.iter().flatten().all(|v| *v > 0.0 && v.is_finite()) {
            return Err(SimError::InvalidConfig("within-study variances must be positive".into()));
        }
        if !sigma_true.is_psd(1e-12) {
            return Err(SimError::InvalidConfig(format!("Σ = {sigma_true:?} is not PSD")));
        }
        if reps == 0 {
            return Err(SimError::InvalidConfig("reps must be at least 1".into()));
        }
        Ok(OracleConfig {
            n: within_vars.len(),
            sigma_true,
            within_vars,
            reps,
            seed,
            ncr_estimator: Estimator::Reml,
        })
    }

    /// All `S_i = 0.2·I`, `Σ = 0.4·I`.
    pub fn homogeneous(n: usize, reps: usize, seed: u64) -> Result<Self> {
        OracleConfig::new(Sym2::scalar(0.4), vec![[0.2, 0.2]; n], reps, seed)
    }

    /// `Σ` with `τ² = 0.4`, `ρ = 0.2` and a design drawn once from the
    /// truncated-`χ²` variance generator (stream `(design_seed, 0, 0)`).
    pub fn heterogeneous(n: usize, reps: usize, seed: u64, design_seed: u64) -> Result<Self> {
        let within = gen_within_variances(n, &mut stream(design_seed, 0, 0))?;
        OracleConfig::new(Sym2::from_variance_correlation(0.4, 0.2), within, reps, seed)
    }

    /// `Σ = 0` with a positive-definite design; paired with
    /// [`SigmaSource::InjectTruth`] every `K` is exactly zero.
    pub fn degenerate(n: usize, reps: usize, seed: u64) -> Result<Self> {
        let within = (0..n).map(|i| [0.1 + 0.02 * i as f64, 0.3]).collect();
        OracleConfig::new(Sym2::ZERO, within, reps, seed)
    }

    pub fn with_ncr_estimator(self, ncr_estimator: Estimator) -> Self {
        OracleConfig { ncr_estimator, ..self }
    }

    pub fn within_covs(&self) -> Vec<Sym2> {
        self.within_vars.iter().map(|s| Sym2::diag(s[0], s[1])).collect()
    }

    fn draw(&self, rep: usize) -> Result<Dataset> {
        let mut rng = stream(self.seed, 0, rep as u64);
        let ys = draw_outcomes([0.0, 0.0], &self.sigma_true, &self.within_vars, &mut rng)?;
        Ok(Dataset::from_pairs(&ys, &self.within_vars)?)
    }
}

/// Where `Σ̂` comes from in each replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaSource {
    /// Bias-corrected, PSD-projected moment estimate.
    Estimate,
    /// `Σ̂ ≡ Σ_true`; a test path for which `K` vanishes identically.
    InjectTruth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub b: BTerms,
    /// Monte Carlo standard errors of the three means.
    pub se: BTerms,
    pub reps: usize,
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, reps: usize) -> (f64, f64) {
    let n = reps as f64;
    let mean = values.clone().sum::<f64>() / n;
    if reps < 2 {
        return (mean, f64::NAN);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `(tr K², tr(K²), tr K)` for `K = {V(Σ̂) − V(Σ)} V(Σ)⁻¹`.
fn k_moments(v_hat: &Sym2, v_true: &Sym2, v_true_inv: &Sym2) -> [f64; 3] {
    let k: Mat2 = (*v_hat - *v_true) * *v_true_inv;
    let t = k.trace();
    [t * t, k.trace_of_product(&k), t]
}

/// Monte Carlo estimates of `B₁ = E[tr(K)²]`, `B₂ = tr E[K²]`, `B₃ = tr E[K]`.
pub fn mc_b_moments(cfg: &OracleConfig) -> Result<MomentEstimate> {
    mc_b_moments_with(cfg, SigmaSource::Estimate)
}

pub fn mc_b_moments_with(cfg: &OracleConfig, source: SigmaSource) -> Result<MomentEstimate> {
    if cfg.reps < MIN_MOMENT_REPS {
        return Err(SimError::InvalidConfig(format!(
            "moment estimation needs at least {MIN_MOMENT_REPS} replications, got {}",
            cfg.reps
        )));
    }
    let template = cfg.draw(0)?;
    let v_true = v_matrix(&template, &cfg.sigma_true)?;
    let v_true_inv = v_true.inverse()?;

    // collected in replication order, then reduced serially
    let per_rep: Vec<[f64; 3]> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let d = cfg.draw(rep)?;
            let sigma_hat = match source {
                SigmaSource::Estimate => bias_corrected_sigma(&d)?,
                SigmaSource::InjectTruth => cfg.sigma_true,
            };
            let v_hat = v_matrix(&d, &sigma_hat)?;
            Ok(k_moments(&v_hat, &v_true, &v_true_inv))
        })
        .collect::<Result<_>>()?;

    let col = |c: usize| mean_and_se(per_rep.iter().map(move |m| m[c]), cfg.reps);
    let (b1, s1) = col(0);
    let (b2, s2) = col(1);
    let (b3, s3) = col(2);
    Ok(MomentEstimate { b: BTerms::new(b1, b2, b3), se: BTerms::new(s1, s2, s3), reps: cfg.reps })
}

/// Tolerance multiplier on the Monte Carlo standard error.
pub const ORACLE_SE_MULTIPLIER: f64 = 3.0;

/// `B*` set against the simulated moments with tolerance
/// `3·SE + 2/n²` per term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleCheck {
    /// `B*` at the true `Σ`, or zero under [`SigmaSource::InjectTruth`]
    /// where `K` vanishes identically.
    pub reference: BTerms,
    pub estimate: MomentEstimate,
    /// The `2/n²` allowance for terms beyond first order.
    pub slack: f64,
}

impl OracleCheck {
    pub fn tolerance(&self) -> BTerms {
        let t = |se: f64| ORACLE_SE_MULTIPLIER * se + self.slack;
        BTerms::new(t(self.estimate.se.b1), t(self.estimate.se.b2), t(self.estimate.se.b3))
    }

    pub fn discrepancy(&self) -> BTerms {
        let (r, e) = (self.reference, self.estimate.b);
        BTerms::new((r.b1 - e.b1).abs(), (r.b2 - e.b2).abs(), (r.b3 - e.b3).abs())
    }

    pub fn within(&self) -> [bool; 3] {
        let (d, t) = (self.discrepancy(), self.tolerance());
        [d.b1 <= t.b1, d.b2 <= t.b2, d.b3 <= t.b3]
    }

    pub fn passed(&self) -> bool {
        self.within().iter().all(|ok| *ok)
    }
}

pub fn check_b_star(cfg: &OracleConfig, source: SigmaSource) -> Result<OracleCheck> {
    let estimate = mc_b_moments_with(cfg, source)?;
    let reference = match source {
        SigmaSource::Estimate => b_star_from_within(&cfg.within_covs(), &cfg.sigma_true)?,
        SigmaSource::InjectTruth => BTerms::ZERO,
    };
    let n = cfg.n as f64;
    Ok(OracleCheck { reference, estimate, slack: 2.0 / (n * n) })
}

/// Coverage expansion
/// `F_k(x) + h x f_k(x) + (B₁/4 − B₂/2 + 2B₃) f_{k+2}(x) − (B₁/4 + B₂/2) f_{k+4}(x)`,
/// remainder dropped.
pub fn expansion_coverage(b: &BTerms, h: f64, x: f64, k: u32) -> f64 {
    let (big_f, f_k, f_k2, f_k4) = if k == 2 {
        let e = (-0.5 * x).exp();
        (-(-0.5 * x).exp_m1(), 0.5 * e, 0.25 * x * e, x * x * e / 16.0)
    } else {
        (chi2::cdf(x, k), chi2::pdf(x, k), chi2::pdf(x, k + 2), chi2::pdf(x, k + 4))
    };
    big_f + h * x * f_k + b.first_order_coef() * f_k2 - b.second_order_coef() * f_k4
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageEstimate {
    pub coverage: f64,
    /// Binomial standard error `√(p(1 − p)/reps)`.
    pub se: f64,
    /// Median adjustment over replications (0 for the naive region).
    pub median_h: f64,
}

pub fn binomial_se(p: f64, reps: usize) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Outcome of one replication for both region types.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RepOutcome {
    pub covered_ncr: bool,
    pub covered_ccr: bool,
    pub h: f64,
}

/// Checks whether the two regions fitted to `d` cover `beta_true`. The
/// corrected region always uses the moment estimator; the naive one uses
/// `ncr_estimator`. A corrected region with `1 + h ≤ 0` counts as not
/// covering.
pub(crate) fn evaluate_rep(
    d: &Dataset,
    alpha: f64,
    beta_true: Vec2,
    ncr_estimator: Estimator,
) -> Result<RepOutcome> {
    let f = fit(d, Estimator::MomentBc, alpha)?;
    let h = f.h.expect("moment fit carries h");
    let covered_ncr = match ncr_estimator {
        Estimator::MomentBc => f.region(Method::Ncr)?.contains(beta_true),
        Estimator::Reml => fit(d, Estimator::Reml, alpha)?.region(Method::Ncr)?.contains(beta_true),
    };
    let covered_ccr = match f.region(Method::Ccr) {
        Ok(r) => r.contains(beta_true),
        Err(dta_core::DtaError::UndefinedRegion(_)) => false,
        Err(e) => return Err(e.into()),
    };
    Ok(RepOutcome { covered_ncr, covered_ccr, h })
}

/// Empirical coverage of the true mean `β = 0` over `cfg.reps` replications
/// with the design held fixed.
pub fn mc_coverage(cfg: &OracleConfig, method: Method, alpha: f64) -> Result<CoverageEstimate> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SimError::InvalidConfig(format!("alpha = {alpha} is not in (0, 1)")));
    }
    let outcomes: Vec<RepOutcome> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| evaluate_rep(&cfg.draw(rep)?, alpha, [0.0, 0.0], cfg.ncr_estimator))
        .collect::<Result<_>>()?;

    let hits = outcomes
        .iter()
        .filter(|o| match method {
            Method::Ncr => o.covered_ncr,
            Method::Ccr => o.covered_ccr,
        })
        .count();
    let coverage = hits as f64 / cfg.reps as f64;
    let median_h = match method {
        Method::Ncr => 0.0,
        Method::Ccr => median(&mut outcomes.iter().map(|o| o.h).collect::<Vec<_>>()),
    };
    Ok(CoverageEstimate { coverage, se: binomial_se(coverage, cfg.reps), median_h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use dta_core::h_adjust;

    #[test]
    fn injected_truth_gives_zero_moments() {
        let cfg = OracleConfig::degenerate(10, 1000, 5).unwrap();
        let m = mc_b_moments_with(&cfg, SigmaSource::InjectTruth).unwrap();
        assert_eq!(m.b, BTerms::ZERO);
        assert_eq!(m.se, BTerms::ZERO);
    }

    #[test]
    fn too_few_reps_rejected() {
        let cfg = OracleConfig::homogeneous(8, 999, 1).unwrap();
        assert!(mc_b_moments(&cfg).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = OracleConfig::heterogeneous(8, 2000, 9, 3).unwrap();
        let a = mc_b_moments(&cfg).unwrap();
        let b = mc_b_moments(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            mc_coverage(&cfg, Method::Ccr, 0.05).unwrap(),
            mc_coverage(&cfg, Method::Ccr, 0.05).unwrap()
        );
    }

    #[test]
    fn disjoint_seeds_agree_within_six_se() {
        let a = mc_b_moments(&OracleConfig::homogeneous(16, 20_000, 1).unwrap()).unwrap();
        let b = mc_b_moments(&OracleConfig::homogeneous(16, 20_000, 2).unwrap()).unwrap();
        for (x, y, sx, sy) in [
            (a.b.b1, b.b.b1, a.se.b1, b.se.b1),
            (a.b.b2, b.b.b2, a.se.b2, b.se.b2),
            (a.b.b3, b.b.b3, a.se.b3, b.se.b3),
        ] {
            assert!((x - y).abs() < 6.0 * sx.hypot(sy), "{x} vs {y}");
        }
    }

    #[test]
    fn expansion_examples() {
        let x: f64 = 5.991465;
        assert!((expansion_coverage(&BTerms::ZERO, 0.0, x, 2) - 0.95).abs() < 1e-7);
        let b = BTerms::homogeneous(8);
        let naive = expansion_coverage(&b, 0.0, x, 2);
        let e = (-0.5 * x).exp();
        // f₄(x) = x e^{-x/2}/4, f₆(x) = x² e^{-x/2}/16 at x = χ²₂(0.05), e^{-x/2} ≈ 0.05
        assert!((0.25 * x * e - 0.0748933).abs() < 1e-6);
        assert!((x * x * e / 16.0 - 0.1121801).abs() < 1e-6);
        assert!((naive - 0.875187).abs() < 1e-5, "{naive}");
        let h = h_adjust(&b, 2, x);
        assert!((expansion_coverage(&b, h, x, 2) - (1.0 - e)).abs() < 1e-15);
    }

    #[test]
    fn generic_k_path_agrees_with_closed_form() {
        let b = BTerms::new(0.3, 0.2, -0.05);
        let x: f64 = 4.2;
        let e = (-0.5 * x).exp();
        let closed = expansion_coverage(&b, 0.1, x, 2);
        let generic = chi2::cdf(x, 2) + 0.1 * x * chi2::pdf(x, 2) + b.first_order_coef() * chi2::pdf(x, 4)
            - b.second_order_coef() * chi2::pdf(x, 6);
        assert!((closed - generic).abs() < 1e-14);
        assert!(
            (closed - (1.0 - e) - 0.1 * x * 0.5 * e - b.first_order_coef() * 0.25 * x * e
                + b.second_order_coef() * x * x * e / 16.0)
                .abs()
                < 1e-15
        );
        // k = 3 cancellation holds through the gamma route as well
        let h = h_adjust(&b, 3, x);
        assert!((expansion_coverage(&b, h, x, 3) - chi2::cdf(x, 3)).abs() < 1e-12);
    }

    #[test]
    fn vanishing_alpha_covers_everything() {
        let cfg = OracleConfig::heterogeneous(8, 200, 4, 4).unwrap();
        let c = mc_coverage(&cfg, Method::Ncr, 1e-300).unwrap();
        assert_eq!(c.coverage, 1.0);
        assert_eq!(c.median_h, 0.0);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&mut []).is_nan());
    }
}
