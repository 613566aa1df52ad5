//! Per-study logit summaries and the dataset container.

use serde::{Deserialize, Serialize};

use crate::error::{DtaError, Result};
use crate::linalg::{Sym2, Vec2};

/// Default continuity correction added to every cell of a 2×2 table that
/// contains a zero.
pub const DEFAULT_CONTINUITY_CORRECTION: f64 = 0.5;

pub fn logit(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok((p / (1.0 - p)).ln())
    } else {
        Err(DtaError::ProbabilityDomain(p))
    }
}

pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One study on the logit scale.
///
/// `s_a` and `s_b` are within-study *variances* of `y_a` and `y_b`; they are
/// placed directly on the diagonal of `S_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub id: String,
    /// Logit sensitivity.
    pub y_a: f64,
    /// Logit specificity.
    pub y_b: f64,
    pub s_a: f64,
    pub s_b: f64,
}

impl Study {
    pub fn new(id: impl Into<String>, y_a: f64, y_b: f64, s_a: f64, s_b: f64) -> Result<Self> {
        let id = id.into();
        let invalid = |reason: &str| DtaError::InvalidStudy { id: id.clone(), reason: reason.into() };
        if !y_a.is_finite() || !y_b.is_finite() {
            return Err(invalid("logit values must be finite"));
        }
        if !(s_a.is_finite() && s_b.is_finite() && s_a >= 0.0 && s_b >= 0.0) {
            return Err(invalid("within-study variances must be finite and non-negative"));
        }
        Ok(Study { id, y_a, y_b, s_a, s_b })
    }

    pub fn y(&self) -> Vec2 {
        [self.y_a, self.y_b]
    }

    /// Within-study covariance `S_i = diag(s_a, s_b)`.
    pub fn within_cov(&self) -> Sym2 {
        Sym2::diag(self.s_a, self.s_b)
    }
}

/// Logit summary of a single 2×2 table.
///
/// When any cell is zero, `cc` is added to all four cells before computing
/// the logits and delta-method variances.
pub fn summarize_counts(
    id: impl Into<String>,
    tp: u64,
    fn_: u64,
    fp: u64,
    tn: u64,
    cc: f64,
) -> Result<Study> {
    let id = id.into();
    if tp + fn_ == 0 || fp + tn == 0 {
        return Err(DtaError::InvalidStudy { id, reason: "a margin (tp+fn or fp+tn) is zero".into() });
    }
    let needs_cc = tp == 0 || fn_ == 0 || fp == 0 || tn == 0;
    if needs_cc && !(cc > 0.0 && cc.is_finite()) {
        return Err(DtaError::InvalidStudy {
            id,
            reason: format!("table has a zero cell and continuity correction {cc} is not positive"),
        });
    }
    let add = if needs_cc { cc } else { 0.0 };
    let (tp, fn_, fp, tn) = (tp as f64 + add, fn_ as f64 + add, fp as f64 + add, tn as f64 + add);
    let y_a = (tp / fn_).ln();
    let y_b = (tn / fp).ln();
    Study::new(id, y_a, y_b, 1.0 / tp + 1.0 / fn_, 1.0 / tn + 1.0 / fp)
}

/// Ordered collection of studies. The order fixes every summation order in
/// the crate.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    studies: Vec<Study>,
}

impl Dataset {
    pub fn new(studies: Vec<Study>) -> Self {
        Dataset { studies }
    }

    /// Builds a dataset from raw `(y, S)` pairs with generated ids.
    pub fn from_pairs(ys: &[Vec2], within: &[Vec2]) -> Result<Self> {
        if ys.len() != within.len() {
            return Err(DtaError::InvalidArgument(format!(
                "{} outcome pairs but {} variance pairs",
                ys.len(),
                within.len()
            )));
        }
        let studies = ys
            .iter()
            .zip(within)
            .enumerate()
            .map(|(i, (y, s))| Study::new(format!("s{}", i + 1), y[0], y[1], s[0], s[1]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { studies })
    }

    pub fn studies(&self) -> &[Study] {
        &self.studies
    }

    pub fn len(&self) -> usize {
        self.studies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.studies.is_empty()
    }

    pub fn ys(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.studies.iter().map(Study::y)
    }

    pub fn within_covs(&self) -> impl Iterator<Item = Sym2> + '_ {
        self.studies.iter().map(Study::within_cov)
    }

    pub fn require(&self, required: usize) -> Result<()> {
        if self.len() < required {
            Err(DtaError::TooFewStudies { required, actual: self.len() })
        } else {
            Ok(())
        }
    }

    /// Copy of the dataset with `c` added to every outcome pair.
    pub fn shifted(&self, c: Vec2) -> Dataset {
        let studies = self
            .studies
            .iter()
            .map(|s| Study { y_a: s.y_a + c[0], y_b: s.y_b + c[1], ..s.clone() })
            .collect();
        Dataset { studies }
    }
}
