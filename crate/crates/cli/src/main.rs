//! `brg`: generate random Bayesian games, solve them, run experiment batches
//! and draw Pareto fronts.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 parse, 5 invalid input,
//! 6 numerical failure, 7 batch finished with failed cells.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use brg_core::experiments::XiMode;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const SEED_ENV: &str = "BRG_SEED";

#[derive(Parser, Debug)]
#[command(name = "brg", version, about = "Risk-sensitive policy optimization for Bayesian stochastic games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write random games as bayes-game-v1 JSON files.
    Generate(GenerateArgs),
    /// Solve one game file with one algorithm.
    Solve(SolveArgs),
    /// Run every algorithm over a batch of random games and tabulate metrics.
    Batch(BatchArgs),
    /// Compute the Pareto front of per-solver mean objectives.
    Pareto(ParetoArgs),
}

#[derive(Args, Debug, Clone)]
pub struct GeneratorArgs {
    #[arg(long = "num-states", visible_alias = "states", default_value_t = 3)]
    pub num_states: usize,
    /// Action count for both players, or `A1,A2`.
    #[arg(long = "num-actions", visible_alias = "actions", value_delimiter = ',', num_args = 1..=2, default_value = "2")]
    pub num_actions: Vec<usize>,
    #[arg(long = "num-types", visible_alias = "types", default_value_t = 2)]
    pub num_types: usize,
    #[arg(long, default_value_t = 1.0)]
    pub dirichlet_alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub reward_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    pub reward_std: f64,
    #[arg(long, value_enum, default_value_t = XiModeArg::Uniform)]
    pub xi_mode: XiModeArg,
    #[arg(long, default_value_t = 0.9)]
    pub discount: f64,
    /// Master seed; the BRG_SEED environment variable takes precedence.
    #[arg(long = "master-seed", visible_alias = "seed", default_value_t = 0)]
    pub master_seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum XiModeArg {
    Uniform,
    Dirichlet,
}

impl From<XiModeArg> for XiMode {
    fn from(m: XiModeArg) -> Self {
        match m {
            XiModeArg::Uniform => XiMode::Uniform,
            XiModeArg::Dirichlet => XiMode::Dirichlet,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 0.3)]
    pub eta1: f64,
    #[arg(long, default_value_t = 0.3)]
    pub eta2: f64,
    #[arg(long, default_value_t = 200)]
    pub outer_iters: usize,
    #[arg(long, default_value_t = 50)]
    pub inner_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub grad_tol: f64,
    /// Jitter the initial logits with N(0, 0.01²) noise drawn from the solver seed.
    #[arg(long)]
    pub init_jitter: bool,
    /// Backward-induction horizon for MMBI / RS-MMBI.
    #[arg(long, default_value_t = brg_core::algorithms::DEFAULT_MMBI_HORIZON)]
    pub horizon: usize,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 1)]
    pub games: usize,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, default_value = "games")]
    pub out: PathBuf,
    /// Record wall-clock metadata in the manifest (makes output non-reproducible).
    #[arg(long)]
    pub timestamps: bool,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    pub game: PathBuf,
    #[arg(long)]
    pub solver: String,
    #[arg(long, conflicts_with = "cvar")]
    pub risk_neutral: bool,
    /// Optimize CVaR at this level instead of the expectation.
    #[arg(long, value_name = "ALPHA")]
    pub cvar: Option<f64>,
    #[command(flatten)]
    pub solver_args: SolverArgs,
    /// Seed for the initial-logit jitter; BRG_SEED takes precedence.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CVaR level of the reported metrics.
    #[arg(long, default_value_t = brg_core::risk::DEFAULT_ALPHA)]
    pub metric_alpha: f64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BatchArgs {
    #[arg(long, default_value_t = 100)]
    pub games: usize,
    #[arg(long, default_value_t = brg_core::risk::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[command(flatten)]
    pub solver_args: SolverArgs,
    /// Comma-separated algorithm names (default: all eight).
    #[arg(long, value_delimiter = ',')]
    pub solvers: Option<Vec<String>>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    #[arg(long)]
    pub timestamps: bool,
}

#[derive(Args, Debug)]
pub struct ParetoArgs {
    /// Per-game CSV written by `batch`.
    pub input: PathBuf,
    #[arg(long, default_value = "U1")]
    pub x: String,
    #[arg(long, default_value = "U2")]
    pub y: String,
    #[arg(long, default_value = "pareto.csv")]
    pub out_csv: PathBuf,
    #[arg(long, default_value = "pareto.svg")]
    pub out_svg: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let seed_override = match std::env::var(SEED_ENV) {
        Ok(v) => match v.trim().parse::<u64>() {
            Ok(seed) => Some(seed),
            Err(_) => {
                eprintln!("error: {SEED_ENV}={v:?} is not an unsigned integer");
                return ExitCode::from(2);
            }
        },
        Err(_) => None,
    };
    let outcome = match cli.command {
        Command::Generate(args) => commands::generate(args, seed_override),
        Command::Solve(args) => commands::solve(args, seed_override),
        Command::Batch(args) => commands::batch(args, seed_override),
        Command::Pareto(args) => commands::pareto(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}
