//! The fit report written by `dta fit`.

use dta_core::sroc::default_fpr_grid;
use dta_core::{
    fit, i_squared, sroc_curve, to_roc_space, BTerms, ConfidenceRegion, Dataset, DtaError, Estimator,
    FitResult, Method, Sym2, Vec2, Warning,
};
use serde::Serialize;

/// Estimator selection on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EstimatorChoice {
    Moment,
    Reml,
    /// Moment-based report plus a REML comparison block.
    Both,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionReport {
    #[serde(flatten)]
    pub region: ConfidenceRegion,
    pub area: f64,
}

impl RegionReport {
    fn new(region: ConfidenceRegion) -> Self {
        RegionReport { area: region.area(), region }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Regions {
    pub ncr: RegionReport,
    /// Absent for REML fits.
    pub ccr: Option<RegionReport>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Heterogeneity {
    pub sens: f64,
    pub spec: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub sens: f64,
}

/// REML fit shown next to the moment fit for `--estimator both`.
#[derive(Debug, Clone, Serialize)]
pub struct RemlComparison {
    pub beta: Vec2,
    pub sigma: Sym2,
    pub v: Sym2,
    pub ncr: RegionReport,
    pub i2: Heterogeneity,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub beta: Vec2,
    pub sigma: Sym2,
    pub v: Sym2,
    pub estimator: Estimator,
    pub h: Option<f64>,
    pub b_terms: Option<BTerms>,
    pub regions: Regions,
    pub i2: Heterogeneity,
    pub sroc: Vec<RocPoint>,
    pub warnings: Vec<Warning>,
    pub reml: Option<RemlComparison>,
}

fn heterogeneity(d: &Dataset, sigma: &Sym2) -> Result<Heterogeneity, DtaError> {
    let sens: Vec<f64> = d.studies().iter().map(|s| s.s_a).collect();
    let spec: Vec<f64> = d.studies().iter().map(|s| s.s_b).collect();
    Ok(Heterogeneity {
        sens: i_squared(&sens, sigma.a11.max(0.0))?,
        spec: i_squared(&spec, sigma.a22.max(0.0))?,
    })
}

/// Empty when `Σ̂₂₂ = 0`, where the curve is undefined.
fn sroc(f: &FitResult) -> Vec<RocPoint> {
    sroc_curve(f.beta, &f.sigma, &default_fpr_grid())
        .map(|pts| pts.into_iter().map(|p| RocPoint { fpr: p[0], sens: p[1] }).collect())
        .unwrap_or_default()
}

/// Fits, builds both regions and assembles the report. A corrected region
/// with `1 + h ≤ 0` is an error.
pub fn build(d: &Dataset, choice: EstimatorChoice, alpha: f64) -> Result<FitReport, DtaError> {
    let primary = match choice {
        EstimatorChoice::Moment | EstimatorChoice::Both => Estimator::MomentBc,
        EstimatorChoice::Reml => Estimator::Reml,
    };
    let f = fit(d, primary, alpha)?;
    let ccr = match primary {
        Estimator::MomentBc => Some(RegionReport::new(f.region(Method::Ccr)?)),
        Estimator::Reml => None,
    };
    let reml = if choice == EstimatorChoice::Both {
        let r = fit(d, Estimator::Reml, alpha)?;
        Some(RemlComparison {
            beta: r.beta,
            sigma: r.sigma,
            v: r.v,
            ncr: RegionReport::new(r.region(Method::Ncr)?),
            i2: heterogeneity(d, &r.sigma)?,
            warnings: r.warnings,
        })
    } else {
        None
    };
    Ok(FitReport {
        beta: f.beta,
        sigma: f.sigma,
        v: f.v,
        estimator: f.estimator,
        h: f.h,
        b_terms: f.b,
        regions: Regions { ncr: RegionReport::new(f.region(Method::Ncr)?), ccr },
        i2: heterogeneity(d, &f.sigma)?,
        sroc: sroc(&f),
        warnings: f.warnings.clone(),
        reml,
    })
}

impl FitReport {
    /// Summary point in ROC space, `(fpr, sensitivity)`.
    pub fn summary_roc(&self) -> Vec2 {
        to_roc_space(&[self.beta])[0]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values serialize")
    }
}
