//! Wald-type confidence regions for the summary logit pair.

use serde::{Deserialize, Serialize};

use crate::bterms::{b_star, h_adjust, BTerms};
use crate::chi2::chi2_quantile;
use crate::error::{DtaError, Result};
use crate::estimate::{
    bias_corrected_sigma_unprojected, gls_beta, reml_sigma, v_matrix, Estimator, MIN_STUDIES,
};
use crate::linalg::{Sym2, Vec2};
use crate::study::Dataset;

/// Dimension of the mean vector.
pub const DIM: u32 = 2;

/// `|h|` above which the adjustment is flagged as unreliable.
pub const LARGE_H: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Naive region with the plain χ²₂ threshold.
    Ncr,
    /// Corrected region with threshold `x(1 + h)`.
    Ccr,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Ncr => "ncr",
            Method::Ccr => "ccr",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// The bias-corrected moment estimate was indefinite and got projected.
    PsdProjected {
        negative_eigenvalue: f64,
    },
    /// `|h| > 1`: the asymptotic correction is outside its reliable range.
    LargeAdjustment {
        h: f64,
    },
    RemlNotConverged {
        iterations: usize,
    },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::PsdProjected { negative_eigenvalue } => {
                write!(f, "moment estimate had eigenvalue {negative_eigenvalue:.6e}; projected to PSD")
            }
            Warning::LargeAdjustment { h } => {
                write!(f, "|h| = {:.4} exceeds {LARGE_H}; correction may be unreliable", h.abs())
            }
            Warning::RemlNotConverged { iterations } => {
                write!(f, "REML did not converge after {iterations} iterations; best iterate used")
            }
        }
    }
}

/// Ellipse `{β : (c − β)ᵗ S⁻¹ (c − β) ≤ threshold}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRegion {
    pub center: Vec2,
    pub shape: Sym2,
    pub threshold: f64,
    pub h: f64,
    pub alpha: f64,
    pub method: Method,
}

impl ConfidenceRegion {
    pub fn new(
        center: Vec2,
        shape: Sym2,
        threshold: f64,
        h: f64,
        alpha: f64,
        method: Method,
    ) -> Result<Self> {
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(DtaError::InvalidArgument(format!("threshold {threshold} must be positive")));
        }
        if !shape.is_pd() {
            return Err(DtaError::NotPositiveDefinite(shape));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(DtaError::InvalidArgument(format!("alpha = {alpha} is not in (0, 1)")));
        }
        if method == Method::Ncr && h != 0.0 {
            return Err(DtaError::InvalidArgument("the naive region carries no adjustment".into()));
        }
        Ok(ConfidenceRegion { center, shape, threshold, h, alpha, method })
    }

    pub fn quad_form(&self, beta: Vec2) -> f64 {
        let diff = [self.center[0] - beta[0], self.center[1] - beta[1]];
        // shape is PD by construction
        self.shape.inv_quad_form(diff).unwrap_or(f64::INFINITY)
    }

    /// Boundary-inclusive membership test.
    pub fn contains(&self, beta: Vec2) -> bool {
        self.quad_form(beta) <= self.threshold
    }

    /// `π · threshold · √det(shape)`.
    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.threshold * self.shape.det().sqrt()
    }

    /// `m` points `center + √threshold · L (cos θ_j, sin θ_j)`, `θ_j = 2πj/m`,
    /// where `L` is the lower Cholesky factor of the shape matrix.
    pub fn boundary(&self, m: usize) -> Result<Vec<Vec2>> {
        if m < 3 {
            return Err(DtaError::InvalidArgument(format!("need at least 3 boundary points, got {m}")));
        }
        let l = self.shape.cholesky()?;
        let r = self.threshold.sqrt();
        Ok((0..m)
            .map(|j| {
                let theta = std::f64::consts::TAU * j as f64 / m as f64;
                let p = l.mul_vec([theta.cos(), theta.sin()]);
                [self.center[0] + r * p[0], self.center[1] + r * p[1]]
            })
            .collect())
    }
}

pub fn region_contains(r: &ConfidenceRegion, beta0: Vec2) -> bool {
    r.contains(beta0)
}

pub fn region_boundary(r: &ConfidenceRegion, m: usize) -> Result<Vec<Vec2>> {
    r.boundary(m)
}

/// Fitted model: summary point, between-study covariance and, for the
/// moment estimator, the correction terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: Vec2,
    pub sigma: Sym2,
    pub v: Sym2,
    pub estimator: Estimator,
    pub alpha: f64,
    /// `χ²₂` upper-`alpha` point.
    pub x: f64,
    pub h: Option<f64>,
    pub b: Option<BTerms>,
    pub n: usize,
    pub warnings: Vec<Warning>,
}

impl FitResult {
    pub fn region(&self, method: Method) -> Result<ConfidenceRegion> {
        match method {
            Method::Ncr => ConfidenceRegion::new(self.beta, self.v, self.x, 0.0, self.alpha, Method::Ncr),
            Method::Ccr => {
                let h = self.h.ok_or(DtaError::CorrectionNeedsMomentEstimator)?;
                if 1.0 + h <= 0.0 {
                    return Err(DtaError::UndefinedRegion(1.0 + h));
                }
                ConfidenceRegion::new(self.beta, self.v, self.x * (1.0 + h), h, self.alpha, Method::Ccr)
            }
        }
    }
}

/// Estimates `Σ` with the requested estimator and assembles the fit.
pub fn fit(d: &Dataset, estimator: Estimator, alpha: f64) -> Result<FitResult> {
    d.require(MIN_STUDIES)?;
    let x = chi2_quantile(alpha, DIM)?;
    let mut warnings = Vec::new();

    let sigma = match estimator {
        Estimator::MomentBc => {
            let raw = bias_corrected_sigma_unprojected(d)?;
            let projected = raw.project_psd();
            if projected != raw {
                warnings.push(Warning::PsdProjected { negative_eigenvalue: raw.eigen().lambda[0] });
            }
            projected
        }
        Estimator::Reml => {
            let r = reml_sigma(d)?;
            if !r.converged {
                warnings.push(Warning::RemlNotConverged { iterations: r.iterations });
            }
            r.sigma
        }
    };

    let beta = gls_beta(d, &sigma)?;
    let v = v_matrix(d, &sigma)?;

    let (h, b) = match estimator {
        Estimator::MomentBc => {
            let b = b_star(d, &sigma)?;
            let h = h_adjust(&b, DIM, x);
            if h.abs() > LARGE_H {
                warnings.push(Warning::LargeAdjustment { h });
            }
            (Some(h), Some(b))
        }
        Estimator::Reml => (None, None),
    };

    Ok(FitResult { beta, sigma, v, estimator, alpha, x, h, b, n: d.len(), warnings })
}

/// Naive or corrected region for the summary point.
///
/// The corrected region needs the bias-corrected moment estimator; asking for
/// it with REML is an error.
pub fn confidence_region(
    d: &Dataset,
    method: Method,
    alpha: f64,
    estimator: Estimator,
) -> Result<ConfidenceRegion> {
    if method == Method::Ccr && estimator != Estimator::MomentBc {
        return Err(DtaError::CorrectionNeedsMomentEstimator);
    }
    fit(d, estimator, alpha)?.region(method)
}
