//! Command-line front end for `gaussrd`.
//!
//! Exit codes: 0 success, 1 malformed input or I/O failure, 2 solver
//! failure (Newton budget exhausted or KKT residual above tolerance).

pub mod commands;
pub mod figures;
pub mod instance;
pub mod output;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 1,
            CliError::Solver(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gaussrd",
    version,
    about = "Rate-distortion tools for Gaussian sources with per-component distortion constraints",
    after_help = "Exit codes: 0 success, 1 malformed input or I/O failure, 2 solver failure."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Report rates in bits (default)
    #[arg(long, global = true, conflicts_with = "nats")]
    pub bits: bool,
    /// Report rates in nats
    #[arg(long, global = true)]
    pub nats: bool,
    /// Seed for every random stream
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Absolute eigenvalue tolerance for the SDC check (default scales with the matrix)
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output directory for CSV/SVG files
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Bits,
    Nats,
}

impl Unit {
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            Unit::Bits => gaussrd::rdf::nats_to_bits(nats),
            Unit::Nats => nats,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Unit::Bits => "bits",
            Unit::Nats => "nats",
        }
    }
}

impl GlobalArgs {
    pub fn unit(&self) -> Unit {
        if self.nats {
            Unit::Nats
        } else {
            Unit::Bits
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the rate-distortion function of an instance file
    Rdf {
        /// JSON instance file
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Check the semidefinite condition K ⪰ diag(e)
    Sdc {
        /// JSON instance file
        instance: PathBuf,
    },
    /// Maximum peripheral correlation and its bounds, one CSV row per constraint vector
    Rho0m {
        /// Constraint vector `e1,e2,...` (central first); repeatable
        #[arg(long = "e", value_name = "LIST")]
        e: Vec<String>,
        /// JSON instance files supplying `e`
        instances: Vec<PathBuf>,
    },
    /// Monte Carlo probability that the SDC holds under uniform constraints
    McSdc {
        /// Source lengths, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long)]
        rho0: f64,
        #[arg(long)]
        rho1: f64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, value_enum, default_value_t = McMethod::Plain)]
        method: McMethod,
    },
    /// Write figure data (CSV) and plots (SVG) to --out (default: current directory)
    Figures {
        #[arg(value_enum)]
        which: Which,
        /// Monte Carlo trials per point for figure 2
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        /// Peripheral correlations plotted in figure 2
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.3,0.4,0.5")]
        rho0_list: Vec<f64>,
        /// Central correlation for figure 2
        #[arg(long, default_value_t = 0.45)]
        rho1: f64,
        /// Largest source length in figure 2
        #[arg(long, default_value_t = 24)]
        max_n: usize,
        /// Random constraint draws per source length for figure 3
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
        /// Largest peripheral constraint for figure 3
        #[arg(long, default_value_t = 0.1)]
        e2: f64,
    },
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1.0)]
    pub mu0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub mu_factor: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub kkt_tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_newton: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum McMethod {
    Plain,
    Cmc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    All,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    match cli.command {
        Command::Rdf { instance, solver } => commands::rdf(g, &instance, &solver),
        Command::Sdc { instance } => commands::sdc(g, &instance),
        Command::Rho0m { e, instances } => commands::rho0m(g, &e, &instances),
        Command::McSdc {
            n_list,
            rho0,
            rho1,
            trials,
            method,
        } => commands::mc_sdc(g, &n_list, rho0, rho1, trials, method),
        Command::Figures {
            which,
            trials,
            rho0_list,
            rho1,
            max_n,
            draws,
            e2,
        } => {
            let cfg = figures::FigureConfig {
                trials,
                rho0_list,
                rho1,
                max_n,
                draws,
                e2,
            };
            figures::run(g, which, &cfg)
        }
    }
}
