//! `tenreg`: sampling, fitting, adaptive loops and statistics for
//! tensor-regression surrogates.

mod commands;
mod config;
mod simulator;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Failure;

#[derive(Parser)]
#[command(name = "tenreg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write an unlabeled Latin Hypercube design.
    Sample(SampleArgs),
    /// Fit a surrogate to a labeled sample file.
    Fit(FitArgs),
    /// Grow the design adaptively by calling an external simulator.
    Adapt(AdaptArgs),
    /// Evaluate a surrogate on the points of a sample file.
    Predict(PredictArgs),
    /// Moments, Sobol indices and an optional density table of a surrogate.
    Stats(StatsArgs),
    /// Run a built-in benchmark end to end.
    Bench(BenchArgs),
}

#[derive(Args)]
pub struct SampleArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of points (overrides `n_init`).
    #[arg(long, short)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV (overrides `paths.samples`).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Solver settings that override the config file.
#[derive(Args, Default)]
pub struct SolverOverrides {
    #[arg(long)]
    pub degree: Option<usize>,
    /// `group-sparse` or `fixed-rank`.
    #[arg(long)]
    pub mode: Option<String>,
    /// Initial CP rank.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub lambda0: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub polish_lambda0: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args)]
pub struct FitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Labeled sample CSV (overrides `paths.samples`).
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Model file to write (overrides `paths.model`).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    /// Warm-start from this model file.
    #[arg(long)]
    pub warm: Option<PathBuf>,
    /// Choose `lambda0` by 5-fold cross-validation.
    #[arg(long)]
    pub cv: bool,
    /// Comma-separated `lambda0` candidates for `--cv`.
    #[arg(long, value_delimiter = ',', requires = "cv")]
    pub cv_grid: Option<Vec<f64>>,
    /// Per-sweep fit log CSV.
    #[arg(long)]
    pub fit_log: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverOverrides,
}

#[derive(Args)]
pub struct AdaptArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    /// Shell command speaking the simulator protocol.
    #[arg(long)]
    pub simulator: String,
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Directory for the fit and sampling logs.
    #[arg(long)]
    pub reports: Option<PathBuf>,
    /// Initial design size when the sample file does not exist yet.
    #[arg(long)]
    pub n_init: Option<usize>,
    /// Stop once this many labeled samples exist.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub m_factor: Option<usize>,
    /// Stop once the relative error of the previous surrogate on a new
    /// batch drops to this value.
    #[arg(long)]
    pub target_error: Option<f64>,
    #[command(flatten)]
    pub solver: SolverOverrides,
}

#[derive(Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub samples: PathBuf,
    /// Output CSV; standard output when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Summary JSON; standard output when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Sobol indices as `index,S,T`.
    #[arg(long)]
    pub sobol_csv: Option<PathBuf>,
    /// Density table of surrogate outputs as `y,density`.
    #[arg(long)]
    pub kde: Option<PathBuf>,
    /// Monte Carlo evaluations for the density table.
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,
    #[arg(long, default_value_t = 200)]
    pub grid_points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct BenchArgs {
    #[command(subcommand)]
    pub which: BenchCmd,
}

#[derive(Subcommand)]
pub enum BenchCmd {
    /// The 100-dimensional synthetic function.
    Synthetic {
        #[arg(long)]
        seed: u64,
        /// Output directory.
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        n_init: usize,
        #[arg(long, default_value_t = 9)]
        batches: usize,
        #[arg(long, default_value_t = 20)]
        batch_size: usize,
        #[arg(long, default_value_t = 100_000)]
        test_size: usize,
        /// Also run the pick-freeze Sobol oracle with this many samples.
        #[arg(long)]
        oracle_samples: Option<usize>,
    },
    /// A random planted CP model.
    Planted {
        #[arg(long)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        rank: usize,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        /// Training samples; four times the planted unknowns when absent.
        #[arg(long)]
        n: Option<usize>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return match f {
                Failure::Config(_) => 2,
                Failure::Simulator(_) => 3,
            };
        }
        if let Some(tenreg::Error::Solver(_)) = cause.downcast_ref::<tenreg::Error>() {
            return 4;
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Sample(a) => commands::sample(a),
        Cmd::Fit(a) => commands::fit(a),
        Cmd::Adapt(a) => commands::adapt(a),
        Cmd::Predict(a) => commands::predict(a),
        Cmd::Stats(a) => commands::stats(a),
        Cmd::Bench(a) => commands::bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
