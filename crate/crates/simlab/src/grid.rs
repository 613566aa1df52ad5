//! Scenario grid: coverage of both regions, median adjustment and average
//! heterogeneity for each `(τ², ρ, n)` combination.

use std::io::Write;

use dta_core::{i_squared, Dataset, Estimator, Sym2};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SimError};
use crate::oracle::{binomial_se, evaluate_rep, median};
use crate::rng::{draw_dataset, stream, Truncation};

pub const GRID_TAU2: [f64; 8] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
pub const GRID_RHO: [f64; 5] = [0.0, 0.2, 0.4, 0.6, 0.8];
pub const GRID_N: [usize; 3] = [8, 16, 24];

pub const CSV_HEADER: &str = "tau2,rho,n,reps,alpha,coverage_ncr,coverage_ccr,median_h,mean_i2,mc_se";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scenario {
    pub tau2: f64,
    pub rho: f64,
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub truncation: Truncation,
    pub ncr_estimator: Estimator,
}

impl Scenario {
    pub fn new(tau2: f64, rho: f64, n: usize, reps: usize, alpha: f64, seed: u64) -> Result<Self> {
        let s = Scenario {
            tau2,
            rho,
            n,
            reps,
            alpha,
            seed,
            truncation: Truncation::Reject,
            ncr_estimator: Estimator::Reml,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if !(self.tau2 >= 0.0 && self.tau2.is_finite()) {
            return bad(format!("tau2 = {} must be non-negative", self.tau2));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return bad(format!("rho = {} must lie in (-1, 1)", self.rho));
        }
        if self.n < dta_core::estimate::MIN_STUDIES {
            return bad(format!("n = {} is below the minimum of 3 studies", self.n));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha = {} is not in (0, 1)", self.alpha));
        }
        Ok(())
    }

    pub fn with_truncation(self, truncation: Truncation) -> Self {
        Scenario { truncation, ..self }
    }

    pub fn with_ncr_estimator(self, ncr_estimator: Estimator) -> Self {
        Scenario { ncr_estimator, ..self }
    }

    /// `[[τ², τ²ρ], [τ²ρ, τ²]]`.
    pub fn sigma(&self) -> Sym2 {
        Sym2::from_variance_correlation(self.tau2, self.rho)
    }

    /// Cartesian product in `n`-major, then `τ²`, then `ρ` order.
    pub fn cross(
        tau2: &[f64],
        rho: &[f64],
        n: &[usize],
        reps: usize,
        alpha: f64,
        seed: u64,
    ) -> Result<Vec<Scenario>> {
        let mut out = Vec::with_capacity(tau2.len() * rho.len() * n.len());
        for &n in n {
            for &t in tau2 {
                for &r in rho {
                    out.push(Scenario::new(t, r, n, reps, alpha, seed)?);
                }
            }
        }
        Ok(out)
    }

    /// The full 8 × 5 × 3 grid at `alpha = 0.05`.
    pub fn standard_grid(reps: usize, seed: u64) -> Result<Vec<Scenario>> {
        Scenario::cross(&GRID_TAU2, &GRID_RHO, &GRID_N, reps, 0.05, seed)
    }
}

/// Replication `rep` of the scenario at position `index` in its grid:
/// `y_i ~ N₂(0, Σ + S_i)` with freshly drawn `S_i`.
pub fn gen_dataset(s: &Scenario, index: usize, rep: usize) -> Result<Dataset> {
    let mut rng = stream(s.seed, index as u64, rep as u64);
    draw_dataset([0.0, 0.0], &s.sigma(), s.n, s.truncation, &mut rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRecord {
    pub scenario: Scenario,
    pub coverage_ncr: f64,
    pub coverage_ccr: f64,
    pub median_h: f64,
    pub mean_i2: f64,
    /// Larger of the two binomial standard errors.
    pub mc_se: f64,
}

#[derive(Debug, Clone, Copy)]
struct Rep {
    covered_ncr: bool,
    covered_ccr: bool,
    h: f64,
    i2: f64,
}

fn run_rep(s: &Scenario, index: usize, rep: usize) -> Result<Rep> {
    let d = gen_dataset(s, index, rep)?;
    let o = evaluate_rep(&d, s.alpha, [0.0, 0.0], s.ncr_estimator)?;
    let sens_vars: Vec<f64> = d.studies().iter().map(|st| st.s_a).collect();
    let i2 = i_squared(&sens_vars, s.tau2)?;
    Ok(Rep { covered_ncr: o.covered_ncr, covered_ccr: o.covered_ccr, h: o.h, i2 })
}

fn summarize(s: &Scenario, reps: &[Rep]) -> GridRecord {
    let total = reps.len() as f64;
    let cov_ncr = reps.iter().filter(|r| r.covered_ncr).count() as f64 / total;
    let cov_ccr = reps.iter().filter(|r| r.covered_ccr).count() as f64 / total;
    let mean_i2 = reps.iter().map(|r| r.i2).sum::<f64>() / total;
    let median_h = median(&mut reps.iter().map(|r| r.h).collect::<Vec<_>>());
    GridRecord {
        scenario: *s,
        coverage_ncr: cov_ncr,
        coverage_ccr: cov_ccr,
        median_h,
        mean_i2,
        mc_se: binomial_se(cov_ncr, reps.len()).max(binomial_se(cov_ccr, reps.len())),
    }
}

/// Runs every scenario. Replications fan out over the rayon pool; each keeps
/// its own stream and the reduction runs serially in replication order, so
/// output is identical for any thread count.
pub fn run_grid(scenarios: &[Scenario]) -> Result<Vec<GridRecord>> {
    if scenarios.is_empty() {
        return Err(SimError::InvalidConfig("empty scenario grid".into()));
    }
    for s in scenarios {
        s.validate()?;
    }
    scenarios
        .par_iter()
        .enumerate()
        .map(|(index, s)| {
            let reps: Vec<Rep> =
                (0..s.reps).into_par_iter().map(|rep| run_rep(s, index, rep)).collect::<Result<_>>()?;
            Ok(summarize(s, &reps))
        })
        .collect()
}

/// `%g`-style formatting with `digits` significant digits.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if exp < -5 || exp >= digits as i32 {
        let s = format!("{:.*e}", digits.saturating_sub(1), x);
        let (mantissa, e) = s.split_once('e').expect("exponent");
        format!("{}e{}", trim(mantissa.to_string()), e)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let s = trim(format!("{x:.decimals$}"));
        // rounding can carry into a new digit, e.g. 9.999999 -> 10.00000
        if s.replace(['-', '.'], "").trim_start_matches('0').len() > digits && !s.contains('.') {
            fmt_sig(s.parse().unwrap_or(x), digits)
        } else {
            s
        }
    }
}

pub fn write_grid_csv<W: Write>(records: &[GridRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let s = &r.scenario;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_sig(s.tau2, 6),
            fmt_sig(s.rho, 6),
            s.n,
            s.reps,
            fmt_sig(s.alpha, 6),
            fmt_sig(r.coverage_ncr, 6),
            fmt_sig(r.coverage_ccr, 6),
            fmt_sig(r.median_h, 6),
            fmt_sig(r.mean_i2, 6),
            fmt_sig(r.mc_se, 6),
        )?;
    }
    Ok(())
}

pub fn grid_csv_string(records: &[GridRecord]) -> String {
    let mut buf = Vec::new();
    write_grid_csv(records, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(0.1, 6), "0.1");
        assert_eq!(fmt_sig(0.0, 6), "0");
        assert_eq!(fmt_sig(0.95, 6), "0.95");
        assert_eq!(fmt_sig(0.2718281828, 6), "0.271828");
        assert_eq!(fmt_sig(1.0, 6), "1");
        assert_eq!(fmt_sig(-0.00123456789, 6), "-0.00123457");
        assert_eq!(fmt_sig(1234567.0, 6), "1.23457e6");
        assert_eq!(fmt_sig(0.00000123456, 6), "1.23456e-6");
        assert_eq!(fmt_sig(0.9999999, 6), "1");
    }

    #[test]
    fn scenario_validation() {
        assert!(Scenario::new(0.4, 0.4, 8, 10, 0.05, 1).is_ok());
        assert!(Scenario::new(-0.1, 0.4, 8, 10, 0.05, 1).is_err());
        assert!(Scenario::new(0.4, 1.0, 8, 10, 0.05, 1).is_err());
        assert!(Scenario::new(0.4, 0.4, 2, 10, 0.05, 1).is_err());
        assert!(Scenario::new(0.4, 0.4, 8, 0, 0.05, 1).is_err());
        assert_eq!(Scenario::standard_grid(10, 1).unwrap().len(), 120);
    }

    #[test]
    fn dataset_is_reproducible() {
        let s = Scenario::new(0.3, 0.2, 8, 10, 0.05, 42).unwrap();
        assert_eq!(gen_dataset(&s, 0, 3).unwrap(), gen_dataset(&s, 0, 3).unwrap());
        assert_ne!(gen_dataset(&s, 0, 3).unwrap(), gen_dataset(&s, 0, 4).unwrap());
        assert_ne!(gen_dataset(&s, 0, 3).unwrap(), gen_dataset(&s, 1, 3).unwrap());
    }

    #[test]
    fn single_rep_gives_binary_coverage() {
        let s = Scenario::new(0.4, 0.4, 8, 1, 0.05, 3).unwrap();
        let r = run_grid(&[s]).unwrap();
        assert!(r[0].coverage_ncr == 0.0 || r[0].coverage_ncr == 1.0);
        assert!(r[0].coverage_ccr == 0.0 || r[0].coverage_ccr == 1.0);
    }

    #[test]
    fn csv_layout() {
        let s = Scenario::new(0.1, 0.0, 8, 20, 0.05, 42).unwrap();
        let recs = run_grid(&[s]).unwrap();
        let csv = grid_csv_string(&recs);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 10);
        assert_eq!(&row[..5], &["0.1", "0", "8", "20", "0.05"]);
        assert!(lines.next().is_none());
        assert!(run_grid(&[]).is_err());
    }
}
