//! Higgins–Thompson style heterogeneity measure.

use crate::error::{DtaError, Result};

/// "Typical" within-study variance
/// `Q = (n − 1) Σw / {(Σw)² − Σw²}` with `w_i = 1 / v_i`.
pub fn typical_within_variance(within_vars: &[f64]) -> Result<f64> {
    let n = within_vars.len();
    if n < 2 {
        return Err(DtaError::TooFewStudies { required: 2, actual: n });
    }
    if let Some(v) = within_vars.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(DtaError::InvalidArgument(format!("within-study variance {v} must be positive")));
    }
    let (sw, sw2) = within_vars.iter().map(|v| 1.0 / v).fold((0.0, 0.0), |(s, s2), w| (s + w, s2 + w * w));
    Ok((n - 1) as f64 * sw / (sw * sw - sw2))
}

/// `I² = τ² / (Q + τ²)`.
pub fn i_squared(within_vars: &[f64], tau2: f64) -> Result<f64> {
    if !(tau2 >= 0.0 && tau2.is_finite()) {
        return Err(DtaError::InvalidArgument(format!("tau2 = {tau2} must be non-negative")));
    }
    let q = typical_within_variance(within_vars)?;
    Ok(tau2 / (q + tau2))
}
