use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use distunlearn::harness::Format;
use distunlearn::mechanisms::ScoringRule;

mod commands;
mod specs;

/// Distributional unlearning: frontiers, guarantees and deletion sweeps.
#[derive(Parser, Debug)]
#[command(name = "distunlearn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Output flags shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct OutputArgs {
    /// Output file; stdout when neither this nor the config names one.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// `csv` or `json-lines`; inferred from the extension otherwise.
    #[arg(long)]
    pub format: Option<Format>,
}

/// Flags shared by the sweep subcommands.
#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// Experiment config (TOML).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Master seed, overriding `sweep.master_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of seeds `0..n`, overriding `sweep.seeds`.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Per-(rule, budget, metric) summary table.
    #[arg(long)]
    pub summary_out: Option<PathBuf>,
    /// Exit 0 even when some cells failed.
    #[arg(long)]
    pub allow_partial: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal preservation divergence for each removal level.
    Frontier {
        #[arg(long, short)]
        config: Option<PathBuf>,
        /// `KL(p1 || p2)` of a shared-covariance Gaussian pair; replaces the config model.
        #[arg(long)]
        divergence: Option<f64>,
        /// Absolute removal levels, comma separated.
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<f64>,
        /// Removal levels as multiples of `KL(p1 || p2)`, comma separated.
        #[arg(long, value_delimiter = ',')]
        alpha_multiples: Vec<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Guarantee bounds over a grid of deletion budgets.
    Bounds {
        #[arg(long, short)]
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Deletion sweep on two univariate Gaussians.
    Simulate {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Overrides `gaussian.mu2`.
        #[arg(long)]
        mu2: Option<f64>,
    },
    /// Scores of every p1 row under one or more rules.
    Score {
        #[arg(long, short)]
        config: PathBuf,
        /// Rules to score, overriding `sweep.rules`.
        #[arg(long, value_delimiter = ',')]
        rule: Vec<ScoringRule>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Full dataset sweep: split, score, delete, retrain, evaluate.
    Experiment {
        #[command(flatten)]
        sweep: SweepArgs,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Frontier {
            config,
            divergence,
            alphas,
            alpha_multiples,
            output,
        } => commands::frontier(config, divergence, alphas, alpha_multiples, output).map(|_| true),
        Command::Bounds { config, output } => commands::bounds(&config, output).map(|_| true),
        Command::Simulate { sweep, mu2 } => commands::simulate(sweep, mu2),
        Command::Score { config, rule, output } => commands::score(&config, rule, output).map(|_| true),
        Command::Experiment { sweep } => commands::experiment(sweep),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
