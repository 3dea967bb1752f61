//! `herd`: command-line access to the square-root predator-prey toolkit.
//!
//! Exit codes: 0 success, 2 usage, 3 undetermined outcome, 4 numerical
//! failure, 5 regime violation.

mod commands;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_UNDETERMINED: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;
pub const EXIT_REGIME: u8 = 5;
const EXIT_IO: u8 = 1;

#[derive(Debug, Parser)]
#[command(name = "herd", version, about = "Square-root functional response predator-prey toolkit")]
#[command(allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List equilibria with stability verdicts (JSON).
    Equilibria(EquilibriaArgs),
    /// Integrate one initial condition (CSV time series + JSON summary).
    Simulate(SimulateArgs),
    /// Extinction threshold K(x0) and time bound (JSON).
    Bound(BoundArgs),
    /// Classify a grid of initial conditions (CSV + JSON manifest).
    Basin(BasinArgs),
    /// Bracket the separatrix on vertical lines (CSV + JSON manifest).
    Separatrix(SeparatrixArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub r: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 2000.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
}

#[derive(Debug, Args)]
pub struct EquilibriaArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub x0: f64,
    #[arg(long)]
    pub y0: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Uniform output grid of N points on [0, t-max].
    #[arg(long)]
    pub samples: Option<usize>,
    /// Follow the exact predator-axis solution after extinction.
    #[arg(long)]
    pub continue_after_extinction: bool,
    /// CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary destination (default: stdout if --out is set, else stderr).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub r: f64,
    #[arg(long)]
    pub alpha: f64,
    /// Not used by the bound; recorded in the output.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub x0: f64,
    #[arg(long)]
    pub y0: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BasinArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 0.05)]
    pub x_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub x_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub y_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub y_max: f64,
    #[arg(long, default_value_t = 20)]
    pub nx: usize,
    #[arg(long, default_value_t = 20)]
    pub ny: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Worker threads (default: all cores). Does not affect the output.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON manifest destination (default: stdout if --out is set, else stderr).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SeparatrixArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 0.05)]
    pub x_min: f64,
    #[arg(long, default_value_t = 0.95)]
    pub x_max: f64,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub bracket_tol: f64,
    /// Lower bracket start.
    #[arg(long, default_value_t = 1e-3)]
    pub y_lo: f64,
    /// Upper bracket start (default: 1.5 K(x) per line).
    #[arg(long)]
    pub y_hi: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

/// A command failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }

    pub fn regime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_REGIME,
            message: message.into(),
        }
    }

    pub fn io(err: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("write failed: {err}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Equilibria(a) => commands::equilibria(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Bound(a) => commands::bound(&a),
        Command::Basin(a) => commands::basin(&a),
        Command::Separatrix(a) => commands::separatrix(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("herd: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
