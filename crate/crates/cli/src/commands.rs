use clap::ValueEnum;
use std::io::Write;
use std::path::Path;

use dta_core::{confidence_region, to_roc_space, Dataset, Estimator, Method};
use dta_simlab::grid::grid_csv_string;
use dta_simlab::{check_b_star, run_grid, OracleConfig, Scenario, SigmaSource, Truncation};

use crate::args::{Command, MethodArg, NcrEstimatorArg, Preset, Space, TruncationArg, DEFAULT_SEED};
use crate::error::CliError;
use crate::input;
use crate::report;
use crate::svg;

/// Study count of the `homogeneous` validation preset.
pub const HOMOGENEOUS_PRESET_N: usize = 32;
/// Study count of the `heterogeneous` and `degenerate` presets.
pub const HETEROGENEOUS_PRESET_N: usize = 16;
/// Seed of the frozen within-study design of the `heterogeneous` preset.
pub const PRESET_DESIGN_SEED: u64 = 2024;

pub fn run(cli: crate::Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit { input, alpha, estimator, json, svg } => {
            cmd_fit(&input, alpha, estimator, json.as_deref(), svg.as_deref())
        }
        Command::Simulate { tau2, rho, n, reps, seed, alpha, truncation, ncr_estimator, out } => {
            let truncation = match truncation {
                TruncationArg::Reject => Truncation::Reject,
                TruncationArg::Clip => Truncation::Clip,
            };
            let ncr_estimator = match ncr_estimator {
                NcrEstimatorArg::Reml => Estimator::Reml,
                NcrEstimatorArg::Moment => Estimator::MomentBc,
            };
            let scenarios: Vec<Scenario> =
                Scenario::cross(&tau2, &rho, &n, reps, alpha, seed.unwrap_or(DEFAULT_SEED))?
                    .into_iter()
                    .map(|s| s.with_truncation(truncation).with_ncr_estimator(ncr_estimator))
                    .collect();
            let csv = grid_csv_string(&run_grid(&scenarios)?);
            emit(out.as_deref(), csv.as_bytes())
        }
        Command::Region { input, method, alpha, points, space, out } => {
            cmd_region(&input, method, alpha, points, space, out.as_deref())
        }
        Command::Validate { preset, reps, seed } => cmd_validate(preset, reps, seed.unwrap_or(DEFAULT_SEED)),
    }
}

/// Reads a study table and converts it to logit summaries.
pub fn load(path: &Path) -> Result<Dataset, CliError> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Read { path: path.into(), source })?;
    let table = input::parse(std::io::BufReader::new(file))
        .and_then(|t| t.to_dataset())
        .map_err(|source| CliError::Input { path: path.into(), source })?;
    Ok(table)
}

/// Writes through a temporary file in the destination directory and renames
/// it into place, so a failed run never leaves a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let fail = |source| CliError::Write { path: path.into(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|source| CliError::Write { path: "<stdout>".into(), source }),
    }
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--alpha {alpha} must lie in (0, 1)")))
    }
}

pub fn cmd_fit(
    input: &Path,
    alpha: f64,
    estimator: report::EstimatorChoice,
    json: Option<&Path>,
    svg_path: Option<&Path>,
) -> Result<(), CliError> {
    check_alpha(alpha)?;
    let d = load(input)?;
    let rep = report::build(&d, estimator, alpha)?;
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    // render everything before touching the filesystem
    let json_text = rep.to_json() + "\n";
    let svg_text = svg_path.map(|_| svg::render(&d, &rep));

    match json {
        Some(p) => {
            write_atomic(p, json_text.as_bytes())?;
            let roc = rep.summary_roc();
            println!(
                "n = {}  sensitivity = {:.4}  specificity = {:.4}  h = {}",
                d.len(),
                roc[1],
                1.0 - roc[0],
                rep.h.map_or("n/a".into(), |h| format!("{h:.4}"))
            );
        }
        None => print!("{json_text}"),
    }
    if let (Some(p), Some(text)) = (svg_path, svg_text) {
        write_atomic(p, text.as_bytes())?;
    }
    Ok(())
}

pub fn cmd_region(
    input: &Path,
    method: MethodArg,
    alpha: f64,
    points: usize,
    space: Space,
    out: Option<&Path>,
) -> Result<(), CliError> {
    check_alpha(alpha)?;
    if points < 3 {
        return Err(CliError::Usage(format!("--points {points} must be at least 3")));
    }
    let d = load(input)?;
    let method = match method {
        MethodArg::Ncr => Method::Ncr,
        MethodArg::Ccr => Method::Ccr,
    };
    let region = confidence_region(&d, method, alpha, Estimator::MomentBc)?;
    let logit = region.boundary(points)?;
    let (header, pts) = match space {
        Space::Logit => ("logit_sens,logit_spec", logit),
        Space::Roc => ("fpr,sens", to_roc_space(&logit)),
    };
    let mut csv = String::from(header);
    csv.push('\n');
    for p in pts {
        csv.push_str(&format!("{},{}\n", p[0], p[1]));
    }
    emit(out, csv.as_bytes())
}

pub fn preset_config(
    preset: Preset,
    reps: usize,
    seed: u64,
) -> Result<(OracleConfig, SigmaSource), CliError> {
    Ok(match preset {
        Preset::Homogeneous => {
            (OracleConfig::homogeneous(HOMOGENEOUS_PRESET_N, reps, seed)?, SigmaSource::Estimate)
        }
        Preset::Heterogeneous => (
            OracleConfig::heterogeneous(HETEROGENEOUS_PRESET_N, reps, seed, PRESET_DESIGN_SEED)?,
            SigmaSource::Estimate,
        ),
        Preset::Degenerate => {
            (OracleConfig::degenerate(HETEROGENEOUS_PRESET_N, reps, seed)?, SigmaSource::InjectTruth)
        }
    })
}

pub fn cmd_validate(preset: Preset, reps: usize, seed: u64) -> Result<(), CliError> {
    if reps < dta_simlab::oracle::MIN_MOMENT_REPS {
        return Err(CliError::Usage(format!(
            "--reps {reps} is below the minimum of {}",
            dta_simlab::oracle::MIN_MOMENT_REPS
        )));
    }
    let (cfg, source) = preset_config(preset, reps, seed)?;
    let check = check_b_star(&cfg, source)?;
    let (r, e, se, d, t) =
        (check.reference, check.estimate.b, check.estimate.se, check.discrepancy(), check.tolerance());
    let name = preset.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    println!("preset = {name}  n = {}  reps = {reps}  seed = {seed}", cfg.n);
    println!(
        "{:<4} {:>13} {:>13} {:>11} {:>11} {:>11}  result",
        "term", "analytic", "monte_carlo", "mc_se", "|diff|", "tolerance"
    );
    let rows = [
        ("B1", r.b1, e.b1, se.b1, d.b1, t.b1),
        ("B2", r.b2, e.b2, se.b2, d.b2, t.b2),
        ("B3", r.b3, e.b3, se.b3, d.b3, t.b3),
    ];
    for ((name, r, e, se, d, t), ok) in rows.into_iter().zip(check.within()) {
        println!(
            "{name:<4} {r:>13.6} {e:>13.6} {se:>11.2e} {d:>11.2e} {t:>11.2e}  {}",
            if ok { "pass" } else { "FAIL" }
        );
    }
    if check.passed() {
        println!("overall: pass");
        Ok(())
    } else {
        println!("overall: FAIL");
        Err(CliError::Validation(format!("{preset:?} preset outside 3 SE + 2/n^2")))
    }
}
