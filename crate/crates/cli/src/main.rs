//! `simcal`: calibrate, evaluate and audit similarity scores from the shell.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use simcal::Method;

use crate::output::Failure;

#[derive(Debug, Parser)]
#[command(name = "simcal", version, about = "Monotone calibration of cosine similarity")]
struct Cli {
    /// Directory that receives every output file.
    #[arg(long, global = true, env = "SIMCAL_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a calibration model to a pairs file.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "isotonic")]
        method: Method,
        #[arg(long, default_value_t = 10)]
        bins: usize,
    },
    /// Calibrate raw scores (one per line) or a pairs file.
    Apply {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Alignment metrics of raw or calibrated scores.
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        bins: usize,
    },
    /// Fit every method and tabulate metrics against the raw scores.
    Compare {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        bins: usize,
    },
    /// High-confidence similarity threshold and its coverage.
    Threshold {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        level: Level,
    },
    /// Kernel density curves, joint histograms and plots.
    Density {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Threshold marker; defaults to the raw high-confidence threshold.
        #[arg(long)]
        tau: Option<f64>,
        /// Evaluation points for the density curves.
        #[arg(long, default_value_t = simcal::density::DEFAULT_GRID_POINTS)]
        grid: usize,
        /// Bins per axis of the joint histogram.
        #[arg(long, default_value_t = simcal::density::DEFAULT_JOINT_BINS)]
        bins: usize,
        /// Smoothing standard deviation in cells.
        #[arg(long, default_value_t = simcal::density::DEFAULT_SMOOTH_SIGMA)]
        sigma: f64,
        #[command(flatten)]
        level: Level,
    },
    /// Randomized order-preservation checks of a model.
    Verify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Stability statistics over perturbed sentence pairs.
    Stability {
        /// Perturbation dataset; the bundled example is used when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        tau: f64,
        /// Embedding file resolving emb_ref_a / emb_ref_b.
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Cosine statistics of uniformly random unit vectors.
    Baseline {
        #[arg(long, default_value_t = simcal::geometry::DEFAULT_DIMENSION)]
        dim: usize,
        #[arg(long, default_value_t = 100_000)]
        pairs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, Args)]
struct Level {
    #[arg(long, default_value_t = simcal::thresholds::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = simcal::thresholds::DEFAULT_HUMAN_CUTOFF)]
    cutoff: f64,
}

fn dispatch(cli: Cli) -> Result<output::Output, Failure> {
    use commands as c;
    match cli.command {
        Command::Fit { input, method, bins } => c::fit(&input, method, bins),
        Command::Apply { model, input } => c::apply(&model, &input),
        Command::Evaluate { input, model, bins } => c::evaluate(&input, model.as_deref(), bins),
        Command::Compare { input, bins } => c::compare(&input, bins),
        Command::Threshold { input, model, level } => c::threshold(&input, model.as_deref(), level.alpha, level.cutoff),
        Command::Density { input, model, tau, grid, bins, sigma, level } => c::density(
            &input,
            model.as_deref(),
            c::DensityOptions { tau, grid, bins, sigma, alpha: level.alpha, cutoff: level.cutoff },
        ),
        Command::Verify { model, seed, trials } => c::verify(&model, seed, trials),
        Command::Stability { input, model, tau, embeddings } => {
            c::stability(input.as_deref(), model.as_deref(), tau, embeddings.as_deref())
        }
        Command::Baseline { dim, pairs, seed } => c::baseline(dim, pairs, seed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { output::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out_dir = cli.out_dir.clone();
    match dispatch(cli).and_then(|out| out.commit(&out_dir)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("simcal: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
