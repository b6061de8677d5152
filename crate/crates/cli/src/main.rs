use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use yieldlag::eval::SelectRule;
use yieldlag::Error;

mod commands;
mod manifest;

pub const DEFAULT_SEED: u64 = 42;

/// Lagged remote-sensing covariates and yield models, from raw series to lag reports.
#[derive(Debug, Parser)]
#[command(name = "yieldlag", version)]
struct Cli {
    /// Seed for every random draw: splits, folds and simulation [default: 42]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads. Outputs do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Output directory, created if missing
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Resample raw series to weekly values (weekly.csv)
    Interpolate {
        #[arg(long)]
        plots: PathBuf,
        #[arg(long)]
        series: PathBuf,
    },
    /// Build the 81-covariate dataset (dataset.csv, skips.csv)
    Featurize {
        #[arg(long)]
        plots: PathBuf,
        #[arg(long)]
        weekly: PathBuf,
    },
    /// Fit one model on the training split (model.json, mse_table.csv, split.json)
    Fit {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        model: ModelKind,
        #[command(flatten)]
        params: ModelParams,
    },
    /// Cross-validation curve of the elastic net on the whole dataset (cv_curve.csv)
    Cv {
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        params: ModelParams,
    },
    /// Lag profiles of an elastic-net model (lag_report.json, lag_report.csv)
    Report {
        #[arg(long)]
        model: PathBuf,
        /// Also write one bar chart per profile
        #[arg(long)]
        svg: bool,
    },
    /// Generate a synthetic study (plots.csv, series.csv, truth.json)
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit all three models on one split and tabulate their errors (mse_table.csv)
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        params: ModelParams,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Enet,
    Gbt,
    Gam,
}

/// A numeric hyperparameter or `auto` for data-driven selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Auto<T> {
    Auto,
    Value(T),
}

impl<T: FromStr> FromStr for Auto<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Auto::Auto);
        }
        s.parse()
            .map(Auto::Value)
            .map_err(|_| format!("expected `auto` or a number, got `{s}`"))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelParams {
    /// Elastic-net mixing parameter
    #[arg(long, default_value_t = 0.02)]
    pub alpha: f64,
    /// Elastic-net penalty, or `auto` for cross-validation
    #[arg(long, default_value = "auto")]
    pub lambda: Auto<f64>,
    /// Folds for the elastic-net penalty search
    #[arg(long, default_value_t = yieldlag::eval::DEFAULT_ENET_FOLDS)]
    pub folds: usize,
    /// Rule picking the penalty from the CV curve: min or one_se
    #[arg(long, default_value = "min", value_parser = parse_rule)]
    pub select: SelectRule,
    /// Length of the penalty grid
    #[arg(long, default_value_t = 100)]
    pub n_lambdas: usize,
    /// Smallest grid penalty as a fraction of the largest
    #[arg(long, default_value_t = 1e-4)]
    pub lambda_ratio: f64,
    /// Minimum split gain of the tree ensemble
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    /// L2 penalty on leaf weights
    #[arg(long, default_value_t = 0.6)]
    pub l2: f64,
    #[arg(long, default_value_t = 5)]
    pub max_depth: usize,
    /// Shrinkage applied to every tree
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    /// Boosting rounds, or `auto` for 3-fold CV over 50..=500
    #[arg(long, default_value = "auto")]
    pub rounds: Auto<usize>,
    /// Additive-model smoothing parameter, or `auto` for GCV
    #[arg(long, default_value = "auto")]
    pub smoothing: Auto<f64>,
    /// Fraction of rows used for training
    #[arg(long, default_value_t = yieldlag::eval::DEFAULT_TRAIN_RATIO)]
    pub train_ratio: f64,
}

fn parse_rule(s: &str) -> Result<SelectRule, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numeric() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if cli.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(2);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
    {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(2);
    }
    match commands::run(&cli.command, cli.seed, &cli.out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
