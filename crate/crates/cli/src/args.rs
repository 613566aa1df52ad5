use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::report::EstimatorChoice;

/// Seed used when neither `--seed` nor `DTA_SEED` is given.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "dta", version, about = "Corrected confidence regions for bivariate DTA meta-analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ncr,
    Ccr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Space {
    Logit,
    Roc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Homogeneous,
    Heterogeneous,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TruncationArg {
    Reject,
    Clip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NcrEstimatorArg {
    Reml,
    Moment,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model and report the summary point, both regions and the SROC curve.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = EstimatorChoice::Moment)]
        estimator: EstimatorChoice,
        /// JSON report path; printed to stdout when absent.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run the coverage simulation over a (tau2, rho, n) grid and write CSV.
    Simulate {
        #[arg(long, value_delimiter = ',', required = true)]
        tau2: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        rho: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, env = "DTA_SEED")]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = TruncationArg::Reject)]
        truncation: TruncationArg,
        #[arg(long, value_enum, default_value_t = NcrEstimatorArg::Reml)]
        ncr_estimator: NcrEstimatorArg,
        /// CSV path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a region boundary as CSV.
    Region {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Ccr)]
        method: MethodArg,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 256)]
        points: usize,
        #[arg(long, value_enum, default_value_t = Space::Logit)]
        space: Space,
        /// CSV path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the analytic correction terms with a Monte Carlo run.
    Validate {
        #[arg(long, value_enum)]
        preset: Preset,
        #[arg(long, default_value_t = 200_000)]
        reps: usize,
        #[arg(long, env = "DTA_SEED")]
        seed: Option<u64>,
    },
}
