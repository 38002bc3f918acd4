mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "pixel-rcnn", version, about = "Per-pixel land-cover classification of satellite time series")]
struct Cli {
    /// JSON run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for splitting, initialization, shuffling and dropout.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic phenology dataset.
    Synth(SynthArgs),
    /// Split, scale and train; writes a checkpoint and a training report.
    Train(TrainArgs),
    /// Confusion matrix and accuracy measures for a checkpoint or a fixture.
    Eval(EvalArgs),
    /// Class map of a dataset laid out as a grid.
    Predict(PredictArgs),
    /// Learning-rate range test.
    LrFind(LrFindArgs),
    /// Principal-component projection and explained-variance ratios.
    Pca(PcaArgs),
    /// Dump the time-distributed activation matrix of chosen samples.
    Inspect(InspectArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 15)]
    pub classes: usize,
    #[arg(long, default_value_t = 200)]
    pub per_class: usize,
    /// Reflectance noise σ.
    #[arg(long, default_value_t = 0.15)]
    pub noise: f64,
    /// Per-sample phase shift σ in time steps.
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long, default_value_t = 9)]
    pub time_steps: usize,
    /// `reference` sizes the 15 reference land-cover classes proportionally.
    #[arg(long)]
    pub proportions: Option<String>,
    /// Total sample count for `--proportions`.
    #[arg(long, default_value_t = 3000)]
    pub total: usize,
    #[arg(long, default_value = "dataset.pxrc")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset file; defaults to the config's data section.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Confusion-matrix CSV to report on without a model.
    #[arg(long, conflicts_with_all = ["checkpoint", "data"])]
    pub fixture: Option<PathBuf>,
    /// Also fit a logistic-regression baseline on `--train`.
    #[arg(long, requires = "train")]
    pub baseline: bool,
    #[arg(long)]
    pub train: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Grid width; samples fill the grid row-major.
    #[arg(long)]
    pub width: usize,
}

#[derive(Args, Debug)]
pub struct LrFindArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-5)]
    pub lo: f64,
    #[arg(long, default_value_t = 0.05)]
    pub hi: f64,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
}

#[derive(Args, Debug)]
pub struct PcaArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub components: usize,
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Sample indices, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub samples: Vec<usize>,
}

pub struct Global {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let global = Global { config: cli.config, seed: cli.seed, out: cli.out };
    let result = match cli.command {
        Command::Synth(a) => commands::synth(&global, a),
        Command::Train(a) => commands::train(&global, a),
        Command::Eval(a) => commands::eval(&global, a),
        Command::Predict(a) => commands::predict(&global, a),
        Command::LrFind(a) => commands::lr_find(&global, a),
        Command::Pca(a) => commands::pca(&global, a),
        Command::Inspect(a) => commands::inspect(&global, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
