//! Experiment runner for the `orbitflow` toolkit.
//!
//! Subcommands write CSV paths, SVG charts and a `manifest.json` echoing the
//! resolved config. Exit status is 0 on success, 1 when a suite or run
//! fails, 2 on bad flags, config files or inputs.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod csvio;
pub mod error;
pub mod manifest;
pub mod settings;
pub mod suites;
pub mod svg;

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "orbitflow", version, about = "Brownian motion and mean-curvature drifts on matrix spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an ensemble of paths of a named process.
    Simulate(SimulateArgs),
    /// Evaluate a drift J at one SPD matrix.
    Drift(DriftArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Integrate dP/dt = J^R(P) under a piecewise-constant schedule.
    Control(ControlArgs),
    /// Run a numerical oracle.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `key = value` file; flags win over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// on-bm, stiefel, grassmann, poincare, cartan-hadamard, wishart, bw-bm,
    /// vertical-bm, sphere-vertical, eigen-wishart or eigen-bw.
    #[arg(long)]
    pub process: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Final time.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep every r-th step.
    #[arg(long)]
    pub record_every: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub noise_scale: Option<f64>,
    /// Initial state: `diag(...)`, a CSV file, or a comma list for
    /// poincare (x,y), sphere-vertical (x0) and the eigenvalue SDEs.
    #[arg(long, allow_hyphen_values = true)]
    pub init: Option<String>,
    #[arg(long)]
    pub endpoints_only: bool,
}

#[derive(Debug, Args)]
pub struct DriftArgs {
    /// spectral, gradient or J-R.
    #[arg(long)]
    pub which: String,
    /// SPD matrix: `diag(...)` or a CSV file.
    #[arg(long)]
    pub input: String,
    /// Metric R for J-R.
    #[arg(long = "R")]
    pub r: Option<String>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// constants, invariants, eigen-consistency, mcf-match or control.
    #[arg(long)]
    pub suite: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Oracle draws per constant.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Monte Carlo paths.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Directory for JSON reports and the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ControlArgs {
    /// Lines `duration; R = [...]` or `duration; G = [...]`.
    #[arg(long)]
    pub schedule: PathBuf,
    #[arg(long = "P0")]
    pub p0: String,
    #[arg(long)]
    pub out: PathBuf,
    /// RK4 steps per segment.
    #[arg(long, default_value_t = 20)]
    pub substeps: usize,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// qv or fd-gradient.
    #[arg(long)]
    pub target: String,
    /// For qv: sphere-vertical, on-bm, grassmann, wishart or cartan-hadamard.
    #[arg(long)]
    pub process: Option<String>,
    /// For fd-gradient: log-det or orbit-log-volume.
    #[arg(long)]
    pub function: Option<String>,
    /// For fd-gradient: base point, `diag(...)` or a CSV file.
    #[arg(long)]
    pub input: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub dt: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => commands::simulate_cmd(a),
        Command::Drift(a) => commands::drift_cmd(a),
        Command::Verify(a) => commands::verify_cmd(a),
        Command::Control(a) => commands::control_cmd(a),
        Command::Oracle(a) => commands::oracle_cmd(a),
    }
}

/// Parses `args` (program name first) and runs; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
