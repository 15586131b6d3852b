use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "emotag",
    version,
    about = "Train, apply and evaluate per-emotion text classifiers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a gold corpus, tune C by cross-validation, train one model per
    /// emotion and evaluate it on the held-out partition
    Train(TrainArgs),
    /// Label every document of an input corpus with a trained bundle
    Classify(ClassifyArgs),
    /// Score a trained bundle against a labelled corpus
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LossArg {
    /// Hinge loss
    L1Hinge,
    /// Squared hinge loss
    L2Hinge,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Accuracy,
    F1,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Gold corpus CSV with header `id,text,<emotion>...` and 0/1 labels
    #[arg(long)]
    pub gold: PathBuf,

    /// Where to write the model bundle
    #[arg(long)]
    pub out: PathBuf,

    /// Where to write the held-out evaluation report [default: <out>.report.csv]
    #[arg(long)]
    pub report: Option<PathBuf>,

    /// Comma-separated emotions to train [default: every label column]
    #[arg(long, value_delimiter = ',')]
    pub emotions: Option<Vec<String>>,

    /// Fraction of the gold corpus used for training
    #[arg(long, default_value_t = 0.7)]
    pub train_fraction: f64,

    /// Number of cross-validation folds
    #[arg(long, default_value_t = 10)]
    pub folds: usize,

    /// Comma-separated candidate values of the cost parameter C
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.01,0.05,0.10,0.20,0.25,0.50,1,2,4,8"
    )]
    pub grid: Vec<f64>,

    /// Master seed for splits, folds and solver order
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Minimum document frequency of an n-gram
    #[arg(long, default_value_t = 2)]
    pub min_df: u32,

    /// Worker threads; the output does not depend on it
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,

    /// SVM loss
    #[arg(long, value_enum, default_value_t = LossArg::L2Hinge)]
    pub loss: LossArg,

    /// Metric maximised when choosing C
    #[arg(long, value_enum, default_value_t = MetricArg::Accuracy)]
    pub tune_metric: MetricArg,

    /// Use one split stratified on the full label combination for all emotions
    #[arg(long)]
    pub shared_split: bool,

    /// Cost multiplier for positive instances
    #[arg(long, default_value_t = 1.0)]
    pub positive_weight: f64,

    /// Solver stopping tolerance on the projected gradient
    #[arg(long, default_value_t = 0.1)]
    pub solver_eps: f64,

    /// Maximum solver sweeps
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,

    #[command(flatten)]
    pub resources: ResourceArgs,

    /// Write one CSV row per cross-validation fold evaluation
    #[arg(long)]
    pub eval_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ResourceArgs {
    /// Directory with lexicon files overriding the built-in ones
    #[arg(long, env = "EMOTAG_LEXICON_DIR")]
    pub lexicon_dir: Option<PathBuf>,

    /// Emoticon table, one emoticon per line [default: built-in table]
    #[arg(long)]
    pub emoticons: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Model bundle written by `train`
    #[arg(long)]
    pub model: PathBuf,

    /// Input corpus CSV with `id,text` records
    #[arg(long)]
    pub input: PathBuf,

    /// Prediction CSV [default: standard output]
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Worker threads; the output does not depend on it
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Model bundle written by `train`
    #[arg(long)]
    pub model: PathBuf,

    /// Gold corpus CSV carrying a label column for every bundled emotion
    #[arg(long)]
    pub gold: PathBuf,

    /// Where to write the report CSV
    #[arg(long)]
    pub report: Option<PathBuf>,

    /// Worker threads; the output does not depend on it
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}
