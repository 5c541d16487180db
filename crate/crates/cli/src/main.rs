//! `weyl`: densities, survival laws, simulations, random-matrix ensembles and
//! oracle suites for Brownian motion in Weyl chambers.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use weyl_core::Family;

use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "weyl",
    version,
    about = "Brownian motion in Weyl chambers of types A, B and D"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transition density of the absorbed or reflected motion.
    Density(DensityArgs),
    /// Probability of staying in the chamber up to time t.
    Survival(SurvivalArgs),
    /// Leading large-time survival law `c t^p`.
    Asymptote(AsymptoteArgs),
    /// Simulate the absorbed motion; writes endpoints.
    Simulate(SimulateArgs),
    /// Simulate the motion conditioned to stay in the chamber.
    Conditioned(ConditionedArgs),
    /// Sample chamber-valued spectra of Brownian matrices.
    Rmt(RmtArgs),
    /// Run brute-force cross-checks.
    Oracle(OracleArgs),
}

#[derive(Args, Serialize, Clone)]
pub struct SystemArgs {
    /// Root system family.
    #[arg(long)]
    pub family: Family,
    /// Rank.
    #[arg(long)]
    pub n: usize,
}

#[derive(Args, Serialize, Clone)]
pub struct OutArgs {
    /// Output file; a `<out>.manifest.json` sidecar is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(ValueEnum, Serialize, Clone, Copy, PartialEq, Eq, Debug)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Serialize, Clone, Copy, PartialEq, Eq, Debug)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryArg {
    Absorbing,
    Reflecting,
}

#[derive(ValueEnum, Serialize, Clone, Copy, PartialEq, Eq, Debug)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    /// Signed or unsigned sum over the Weyl group.
    Sum,
    /// Determinant or permanent.
    Det,
}

#[derive(ValueEnum, Serialize, Clone, Copy, PartialEq, Eq, Debug)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Nested quadrature of the absorbing density (rank at most 3).
    Quadrature,
    /// Fraction of simulated paths that survive.
    Direct,
    /// Weighted conditioned paths, `h(eta) E[1/h(X_t)]`.
    HTransform,
}

#[derive(ValueEnum, Serialize, Clone, Copy, PartialEq, Eq, Debug)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Harmonic,
    Lattice,
    Quadrature,
    All,
}

#[derive(Args, Serialize, Clone)]
pub struct DensityArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    /// Start point, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub eta: Vec<f64>,
    /// End point, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub lambda: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Absorbing)]
    pub boundary: BoundaryArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Det)]
    pub method: MethodArg,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Serialize, Clone)]
pub struct SurvivalArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub eta: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    #[arg(long, value_enum, default_value_t = Estimator::Quadrature)]
    pub estimator: Estimator,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cap absorbed steps at `kappa d^2`, `d` the distance to the walls.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Serialize, Clone)]
pub struct AsymptoteArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub eta: Vec<f64>,
    /// Also evaluate the law at this time.
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Serialize, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub eta: Vec<f64>,
    /// Horizon.
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long)]
    pub paths: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Disable the Brownian-bridge crossing correction.
    #[arg(long)]
    pub no_bridge: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Serialize, Clone)]
pub struct ConditionedArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub eta: Vec<f64>,
    /// Horizon.
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long)]
    pub paths: usize,
    #[arg(long)]
    pub seed: u64,
    /// Drift guard: halve steps while `|mu| dt > theta d`.
    #[arg(long, default_value_t = weyl_core::montecarlo::DEFAULT_THETA)]
    pub theta: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Serialize, Clone)]
pub struct RmtArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    /// Number of matrices.
    #[arg(long)]
    pub paths: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Serialize, Clone)]
pub struct OracleArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    /// Longest walk for the lattice suite.
    #[arg(long, default_value_t = 6)]
    pub steps: usize,
    /// Start point for the quadrature suite; defaults to a reference point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub eta: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub t: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("WEYL_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("WEYL_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure {n} threads: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Density(a) => commands::density(&a),
        Command::Survival(a) => commands::survival(&a),
        Command::Asymptote(a) => commands::asymptote(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Conditioned(a) => commands::conditioned(&a),
        Command::Rmt(a) => commands::rmt(&a),
        Command::Oracle(a) => commands::oracle(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
