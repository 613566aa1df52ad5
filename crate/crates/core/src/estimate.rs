//! Estimators for the mean vector and the between-study covariance.

use serde::{Deserialize, Serialize};

use crate::error::{DtaError, Result};
use crate::linalg::{Sym2, Vec2};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::study::Dataset;

/// Minimum number of studies for estimating `Σ` (three free parameters).
pub const MIN_STUDIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Bias-corrected moment estimator computed from OLS residuals.
    MomentBc,
    Reml,
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Estimator::MomentBc => "moment_bc",
            Estimator::Reml => "reml",
        })
    }
}

/// Componentwise mean of the outcome pairs (OLS with `X_i = I₂`).
pub fn ols_beta(d: &Dataset) -> Result<Vec2> {
    d.require(1)?;
    let n = d.len() as f64;
    let sum = d.ys().fold([0.0, 0.0], |acc, y| [acc[0] + y[0], acc[1] + y[1]]);
    Ok([sum[0] / n, sum[1] / n])
}

fn precisions(d: &Dataset, sigma: &Sym2) -> Result<Vec<Sym2>> {
    d.within_covs().map(|s| (*sigma + s).inverse()).collect()
}

/// `(Σ_i D_i⁻¹)⁻¹` together with `Σ_i D_i⁻¹ y_i`.
fn gls_parts(d: &Dataset, sigma: &Sym2) -> Result<(Sym2, Vec2)> {
    d.require(1)?;
    let mut info = Sym2::ZERO;
    let mut score = [0.0, 0.0];
    for (p, y) in precisions(d, sigma)?.into_iter().zip(d.ys()) {
        info = info + p;
        let py = p.mul_vec(y);
        score[0] += py[0];
        score[1] += py[1];
    }
    Ok((info.inverse()?, score))
}

/// Generalized least squares mean `(Σ D_i⁻¹)⁻¹ Σ D_i⁻¹ y_i` with `D_i = Σ + S_i`.
pub fn gls_beta(d: &Dataset, sigma: &Sym2) -> Result<Vec2> {
    let (v, score) = gls_parts(d, sigma)?;
    Ok(v.mul_vec(score))
}

/// Covariance of the GLS mean, `V(Σ) = (Σ_i D_i⁻¹)⁻¹`.
pub fn v_matrix(d: &Dataset, sigma: &Sym2) -> Result<Sym2> {
    Ok(gls_parts(d, sigma)?.0)
}

/// Unprojected moment estimator
/// `(1/n) Σ_i {(y_i − ȳ)(y_i − ȳ)ᵗ − S_i}`. May be indefinite.
pub fn moment_sigma0(d: &Dataset) -> Result<Sym2> {
    d.require(2)?;
    let mean = ols_beta(d)?;
    let n = d.len() as f64;
    let sum: Sym2 = d
        .studies()
        .iter()
        .map(|s| {
            let r = [s.y_a - mean[0], s.y_b - mean[1]];
            Sym2::new(r[0] * r[0], r[0] * r[1], r[1] * r[1]) - s.within_cov()
        })
        .sum();
    Ok(sum.scale(1.0 / n))
}

/// Second-order bias correction of the moment estimator before projection:
/// `Σ̂₀ + n⁻² Σ_i (Σ̂₀ + S_i)`.
pub fn bias_corrected_sigma_unprojected(d: &Dataset) -> Result<Sym2> {
    let sigma0 = moment_sigma0(d)?;
    let n = d.len() as f64;
    let bias: Sym2 = d.within_covs().map(|s| sigma0 + s).sum();
    Ok(sigma0 + bias.scale(1.0 / (n * n)))
}

/// Bias-corrected moment estimator, projected onto the PSD cone.
pub fn bias_corrected_sigma(d: &Dataset) -> Result<Sym2> {
    Ok(bias_corrected_sigma_unprojected(d)?.project_psd())
}

/// Restricted log-likelihood (up to an additive constant).
pub fn reml_loglik(d: &Dataset, sigma: &Sym2) -> Result<f64> {
    let prec = precisions(d, sigma)?;
    let info: Sym2 = prec.iter().copied().sum();
    let v = info.inverse()?;
    let mut score = [0.0, 0.0];
    for (p, y) in prec.iter().zip(d.ys()) {
        let py = p.mul_vec(y);
        score[0] += py[0];
        score[1] += py[1];
    }
    let beta = v.mul_vec(score);
    let mut ll = 0.0;
    for (p, s) in prec.iter().zip(d.studies()) {
        let r = [s.y_a - beta[0], s.y_b - beta[1]];
        // ln|D_i| = −ln|D_i⁻¹|
        ll -= 0.5 * (-p.det().ln() + p.quad_form(r));
    }
    ll -= 0.5 * info.det().ln();
    Ok(ll)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemlFit {
    pub sigma: Sym2,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sigma_from_params(p: &[f64]) -> Sym2 {
    Sym2::from_cholesky(p[0].exp(), p[1], p[2].exp())
}

/// REML estimate of `Σ` via Nelder–Mead over the log-Cholesky parameters
/// `(ln L₁₁, L₂₁, ln L₂₂)`, started from the projected moment estimate.
///
/// Hitting the iteration cap is not an error: the best iterate is returned
/// with `converged = false`.
pub fn reml_sigma(d: &Dataset) -> Result<RemlFit> {
    reml_sigma_with(d, NelderMeadOptions::default())
}

pub fn reml_sigma_with(d: &Dataset, opts: NelderMeadOptions) -> Result<RemlFit> {
    d.require(MIN_STUDIES)?;
    let first = d.studies()[0].y();
    if d.ys().all(|y| y == first) {
        return Err(DtaError::Degenerate("all studies report identical outcomes".into()));
    }

    let n = d.len() as f64;
    let mean_within = d.within_covs().map(|s| s.trace()).sum::<f64>() / (2.0 * n);
    let floor = 1e-3 * mean_within.max(1e-6);
    let start = bias_corrected_sigma(d)? + Sym2::scalar(floor);
    let l = start.cholesky()?;
    let x0 = [l.m[0][0].ln(), l.m[1][0], l.m[1][1].ln()];

    let objective = |p: &[f64]| match reml_loglik(d, &sigma_from_params(p)) {
        Ok(ll) if ll.is_finite() => -ll,
        _ => f64::INFINITY,
    };
    let min = nelder_mead(objective, &x0, opts);
    let sigma = sigma_from_params(&min.x);
    Ok(RemlFit { sigma, loglik: -min.value, iterations: min.iterations, converged: min.converged })
}
