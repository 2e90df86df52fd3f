//! The `bems` command line: dataset synthesis, probability matrices,
//! scenarios, day plans, closed-loop simulation and the policy report.
//!
//! [`run`] parses arguments, executes one subcommand and maps the outcome to
//! an exit code, so the binary and the tests share one entry point.

mod commands;
mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use bems_core::{Error, PolicyKind};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

pub use commands::{load_inputs, run_all, Inputs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_SOLVER_LIMIT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "bems", version, about = "Scenario-based battery dispatch for a PV building")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// TOML run configuration; defaults apply to anything left out.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Dataset CSV file(s). Without this the bundled synthetic dataset is
    /// generated in memory from the configuration.
    #[arg(long = "data", global = true)]
    pub data: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Only errors are printed.
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the bundled synthetic dataset.
    SynthData {
        /// Target file; defaults to `<out>/dataset.csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the forecast, historical and total probability matrices of a day.
    BuildProbs {
        #[arg(long)]
        date: Option<NaiveDate>,
    },
    /// Write the planning scenarios of a day as CSV and SVG.
    GenScenarios {
        #[arg(long)]
        date: Option<NaiveDate>,
    },
    /// Solve the day-ahead plan of one policy.
    PlanDay {
        #[arg(long)]
        date: Option<NaiveDate>,
        #[arg(long, default_value = "stochastic")]
        policy: PolicyKind,
        /// Initial state of charge in percent; defaults to the plant's.
        #[arg(long)]
        soc0: Option<f64>,
    },
    /// Run one policy in closed loop over a date range.
    Simulate {
        #[command(flatten)]
        range: DateRange,
        #[arg(long, default_value = "stochastic")]
        policy: PolicyKind,
    },
    /// Simulate every policy and tabulate the metrics.
    Report {
        #[command(flatten)]
        range: DateRange,
    },
}

#[derive(Debug, Clone, Copy, Args)]
pub struct DateRange {
    /// First simulated day; defaults to the start of the evaluation window.
    #[arg(long)]
    pub from: Option<NaiveDate>,
    /// Last simulated day (inclusive).
    #[arg(long)]
    pub to: Option<NaiveDate>,
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::SolverLimit => EXIT_SOLVER_LIMIT,
        Error::Config(_) | Error::InvalidInput(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
