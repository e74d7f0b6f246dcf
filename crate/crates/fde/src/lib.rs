//! Command-line front end for `fde-core`: TOML problem files, CSV samples,
//! certificate reports and reference cross-checks.
//!
//! ```text
//! fde solve <config> [--verify steps|pantograph|rk4] [--report <path>]
//!                    [--sample-step <dt>] [--quiet]
//! ```
//!
//! Exit codes: 0 success, 1 config or usage, 2 validation, 3 convergence,
//! 4 I/O.

// `!(a < b)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{load_config, parse_config, DirectionKind, ProblemConfig};
pub use error::CliError;
pub use run::{run, RunOptions, RunOutcome};
pub use verify::{VerifyKind, VerifyOutcome};

#[derive(Debug, Parser)]
#[command(
    name = "fde",
    version,
    about = "Windowed Picard solver for retarded and advanced functional differential equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the problem in a config file; write CSV samples and a report.
    Solve {
        config: PathBuf,
        /// Compare against a reference solver and add the result to the report.
        #[arg(long, value_enum)]
        verify: Option<VerifyKind>,
        /// Report path; default `<csv path>.report`.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Spacing of CSV rows; overrides `output.sample_step`.
        #[arg(long)]
        sample_step: Option<f64>,
        /// Print nothing on success.
        #[arg(long)]
        quiet: bool,
    },
}

/// Parses `args` (including the program name), runs, and returns the exit
/// code. Diagnostics go to `err`, the summary to `out`.
pub fn main_with(args: impl IntoIterator<Item = OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    let Command::Solve {
        config,
        verify,
        report,
        sample_step,
        quiet,
    } = cli.command;
    let opts = RunOptions {
        verify,
        report,
        sample_step,
    };
    match load_config(&config).and_then(|cfg| run(&cfg, &opts)) {
        Ok(outcome) => {
            if let Some(v) = &outcome.verify {
                if !v.within_tolerance() || !v.certificate_covers() {
                    let _ = writeln!(
                        err,
                        "warning: --verify {}: max deviation {:e} (tolerance {:e}, certificate {})",
                        v.kind.name(),
                        v.max_deviation,
                        v.tolerance,
                        if v.certificate_covers() {
                            "covers it"
                        } else {
                            "does not cover it"
                        }
                    );
                }
            }
            if !quiet {
                let r = outcome.solution.report();
                let _ = writeln!(
                    out,
                    "solved {} window(s), {} iteration(s), max error bound {:e}",
                    r.total_windows(),
                    r.total_iterations(),
                    r.max_error_bound()
                );
                let _ = writeln!(out, "csv: {}", outcome.csv_path.display());
                let _ = writeln!(out, "report: {}", outcome.report_path.display());
                if let Some(v) = &outcome.verify {
                    let _ = writeln!(out, "verify {}: max deviation {:e}", v.kind.name(), v.max_deviation);
                }
            }
            0
        }
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}
