//! Summary ROC curve and the map from logit space to ROC space.

use crate::error::{DtaError, Result};
use crate::linalg::{Sym2, Vec2};
use crate::study::{expit, logit};

/// FPR grid `0.005, 0.010, …, 0.995` (199 points).
pub fn default_fpr_grid() -> Vec<f64> {
    (1..200).map(|i| i as f64 * 0.005).collect()
}

/// Reitsma-style SROC: the regression of logit sensitivity on logit
/// specificity implied by `(β, Σ)`, evaluated at each false-positive rate.
/// Returns `(fpr, sensitivity)` pairs.
pub fn sroc_curve(beta: Vec2, sigma: &Sym2, fpr_grid: &[f64]) -> Result<Vec<Vec2>> {
    if sigma.a22.is_nan() || sigma.a22 <= 0.0 {
        return Err(DtaError::InvalidArgument(
            "SROC needs a positive between-study variance of logit specificity".into(),
        ));
    }
    let slope = sigma.a12 / sigma.a22;
    fpr_grid
        .iter()
        .map(|&t| {
            let mu_b = logit(1.0 - t)?;
            Ok([t, expit(beta[0] + slope * (mu_b - beta[1]))])
        })
        .collect()
}

/// `(u, v) ↦ (1 − expit(v), expit(u))`: logit (sensitivity, specificity) to
/// (false-positive rate, sensitivity).
pub fn to_roc_space(points: &[Vec2]) -> Vec<Vec2> {
    points.iter().map(|p| [1.0 - expit(p[1]), expit(p[0])]).collect()
}

/// Inverse of [`to_roc_space`].
pub fn from_roc_space(points: &[Vec2]) -> Result<Vec<Vec2>> {
    points.iter().map(|p| Ok([logit(p[1])?, logit(1.0 - p[0])?])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flat_without_correlation() {
        let c = sroc_curve([0.7, 1.2], &Sym2::diag(0.3, 0.5), &default_fpr_grid()).unwrap();
        assert_eq!(c.len(), 199);
        assert!(c.iter().all(|p| (p[1] - expit(0.7)).abs() < 1e-15));
    }

    #[test]
    fn passes_through_summary_point() {
        let beta = [1.3, 0.4];
        let t = 1.0 - expit(beta[1]);
        let c = sroc_curve(beta, &Sym2::new(0.5, 0.3, 0.4), &[t]).unwrap();
        assert!((c[0][1] - expit(beta[0])).abs() < 1e-12);
    }

    #[test]
    fn hand_example_and_monotonicity() {
        let sigma = Sym2::new(0.5, 0.25, 0.5);
        let c = sroc_curve([1.0, 1.0], &sigma, &[0.5]).unwrap();
        assert!((c[0][1] - 0.62246).abs() < 1e-5);
        let c = sroc_curve([1.0, 1.0], &sigma, &default_fpr_grid()).unwrap();
        // positive covariance: higher FPR means lower logit specificity, hence lower sensitivity
        assert!(c.windows(2).all(|w| w[1][1] < w[0][1]));
        assert!(sroc_curve([0.0, 0.0], &Sym2::diag(0.5, 0.0), &[0.5]).is_err());
    }

    #[test]
    fn roc_space_examples() {
        assert_eq!(to_roc_space(&[[0.0, 0.0]]), vec![[0.5, 0.5]]);
        let p = to_roc_space(&[[2.197224577, 2.197224577]])[0];
        assert!((p[0] - 0.1).abs() < 1e-9 && (p[1] - 0.9).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn roc_round_trip(u in -8.0f64..8.0, v in -8.0f64..8.0) {
            let back = from_roc_space(&to_roc_space(&[[u, v]])).unwrap()[0];
            prop_assert!((back[0] - u).abs() < 1e-12 * u.abs().max(1.0) * 1e3);
            prop_assert!((back[1] - v).abs() < 1e-12 * v.abs().max(1.0) * 1e3);
        }
    }
}
