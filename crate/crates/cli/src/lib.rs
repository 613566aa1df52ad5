//! Library side of the `dta` command: CSV ingestion, the fit report, the SVG
//! plot and the subcommand drivers.

pub mod args;
pub mod commands;
pub mod error;
pub mod input;
pub mod report;
pub mod svg;

pub use args::{Cli, Command};
pub use commands::run;
pub use error::CliError;
