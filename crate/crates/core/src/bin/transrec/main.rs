use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod i2i;
mod seq;
mod settings;

/// Translation-based sequential recommendation.
#[derive(Debug, Parser)]
#[command(name = "transrec", version, about)]
struct Cli {
    /// Plain-text key=value file with defaults for training flags (also read
    /// from TRANSREC_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load, core-filter and split an interaction log.
    Prepare(seq::PrepareArgs),
    /// Train a sequential model, optionally grid-searching regularization.
    Train(seq::TrainArgs),
    /// Evaluate a trained model on a prepared dataset.
    Eval(seq::EvalArgs),
    /// Top-N next-item recommendations for one user.
    Recommend(seq::RecommendArgs),
    /// Train an item-to-item relation model on directed edges.
    I2iTrain(i2i::TrainArgs),
    /// Evaluate an item-to-item model on held-out edges.
    I2iEval(i2i::EvalArgs),
    /// Build a bag-of-words feature matrix from item text.
    I2iFeatures(i2i::FeaturesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

/// Hyperparameters shared by both training commands. Unset flags fall back to
/// the configuration file, then to the defaults shown.
#[derive(Debug, Args)]
pub struct TrainFlags {
    /// Latent dimensionality [default: 10, item-to-item 100].
    #[arg(long)]
    dim: Option<usize>,
    /// SGD learning rate [default: 0.05].
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Single regularization strength [default: 0].
    #[arg(long, conflicts_with_all = ["grid", "lambda_grid"])]
    lambda: Option<f64>,
    /// Search the default grid 0,0.001,0.01,0.1,1 (and PRME alpha 0.2,0.5,0.8).
    #[arg(long)]
    grid: bool,
    /// Comma-separated regularization grid.
    #[arg(long)]
    lambda_grid: Option<String>,
    /// Maximum training iterations (one iteration = one pass worth of samples) [default: 100].
    #[arg(long)]
    max_iterations: Option<usize>,
    /// SGD steps per iteration [default: number of training transitions].
    #[arg(long)]
    samples_per_iteration: Option<usize>,
    /// Iterations without validation improvement before stopping [default: 5].
    #[arg(long)]
    patience: Option<usize>,
    /// Seed for every random substream [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Scalar type of the stored parameters [default: f64].
    #[arg(long, value_enum)]
    precision: Option<Precision>,
}

fn exit_code(e: &transrec::Error) -> u8 {
    use transrec::Error::*;
    if e.is_numerical() {
        return 3;
    }
    match e {
        Io { .. }
        | Malformed { .. }
        | Annihilated { .. }
        | Empty(_)
        | InvalidArgument(_)
        | DimensionMismatch { .. }
        | Corrupt(_)
        | ShapeMismatch(_)
        | NoNegative { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let settings = match settings::Settings::load(cli.config.as_deref()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let result = match cli.command {
        Command::Prepare(a) => seq::prepare(a),
        Command::Train(a) => seq::train(a, &settings),
        Command::Eval(a) => seq::eval(a),
        Command::Recommend(a) => seq::recommend(a),
        Command::I2iTrain(a) => i2i::train(a, &settings),
        Command::I2iEval(a) => i2i::eval(a),
        Command::I2iFeatures(a) => i2i::features(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
