use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "dalsa",
    version,
    about = "Importance-weighted tumor segmentation from sparse annotations"
)]
pub struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Log progress (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mode-normalize every channel of a patient volume.
    Normalize {
        #[arg(long)]
        patient: PathBuf,
        #[arg(long, default_value_t = 256)]
        bins: usize,
    },
    /// Estimate density-ratio weights for sparse-label voxels.
    Weights(WeightsArgs),
    /// Train a weighted random forest.
    Train(TrainArgs),
    /// Predict with a trained forest.
    Predict(PredictArgs),
    /// DICE, sensitivity, specificity and PPV of a prediction CSV.
    Eval(EvalArgs),
    /// ROC curve of a prediction CSV.
    SweepRoc(SweepArgs),
    /// DICE-versus-threshold curve of a prediction CSV.
    SweepDice(SweepArgs),
    /// Leave-one-patient-out experiment.
    Loocv(RunArgs),
    /// Leave-one-patient-out experiment per lambda value.
    SweepLambda {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated lambda values.
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
        lambdas: Vec<f64>,
    },
    /// Leave-one-patient-out experiment per maximum tree depth.
    SweepDepth {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated depths.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8")]
        depths: Vec<usize>,
    },
    /// Generate synthetic data.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Inspect a trained forest.
    #[command(subcommand)]
    Model(ModelCommand),
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// The 10x10 two-region toy image with salt noise.
    Toy {
        /// Use the raw intensity as a single feature instead of indicators.
        #[arg(long)]
        raw_intensity: bool,
    },
    /// Gaussian covariate-shift tables and biased-annotation patients.
    Gaussian {
        #[arg(long, default_value_t = 1000)]
        n_train: usize,
        #[arg(long, default_value_t = 10000)]
        n_test: usize,
        /// Number of patient directories to write.
        #[arg(long, default_value_t = 3)]
        patients: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    /// Print forest metadata, or one tree with `--tree`.
    Show {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        tree: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    /// Patient directory or manifest.
    #[arg(long, conflicts_with_all = ["train", "test"])]
    pub patient: Option<PathBuf>,
    /// Training sample CSV (table mode).
    #[arg(long, requires = "test")]
    pub train: Option<PathBuf>,
    /// Test sample CSV (table mode).
    #[arg(long, requires = "train")]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Classes {
    Two,
    Five,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Fusion {
    Before,
    After,
}

#[derive(Debug, Args, Default)]
pub struct ForestArgs {
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub mtry: Option<usize>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    #[arg(long)]
    pub no_bootstrap: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Directory of patient directories.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Patient subdirectory names (default: all).
    #[arg(long, value_delimiter = ',')]
    pub patients: Vec<String>,
    /// LSA, DALSA, LCA, LCA_sampled or DALCA_sampled.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long, value_enum)]
    pub classes: Option<Classes>,
    #[arg(long, value_enum)]
    pub fusion: Option<Fusion>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub sample_ratio: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Write each fold's forest under `models/`.
    #[arg(long)]
    pub save_models: bool,
    #[command(flatten)]
    pub forest: ForestArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Sample CSV (`f0..,label[,weight]`).
    #[arg(long, conflicts_with = "patient")]
    pub samples: Option<PathBuf>,
    /// Patient directories; rows are assembled per `--method`.
    #[arg(long)]
    pub patient: Vec<PathBuf>,
    /// Where to write the model (default: OUT/model.json).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, conflicts_with = "samples")]
    pub patient: Option<PathBuf>,
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value = "two")]
    pub classes: Classes,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prediction CSV written by `predict`.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Threshold the score column instead of using the label column.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    /// Use every distinct score as a threshold instead of the 101-point grid.
    #[arg(long)]
    pub exact: bool,
}
