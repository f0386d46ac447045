//! `eventloc` — classify location words in news articles as correct or
//! incorrect event locations.
//!
//! The pipeline runs as inspectable stages: `treat` preprocesses a corpus,
//! `train` fits a classifier on collocation-pattern features, `predict`
//! scores new articles, `evaluate` runs repeated cross-validation against
//! the heuristic baselines, `baselines` scores the heuristics alone, and
//! `export-plots` turns a report into plot-ready CSV files.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::CliError;
use crate::config::FileConfig;

#[derive(Parser)]
#[command(name = "eventloc", version, about, max_term_width = 100)]
struct Cli {
    /// Flat key=value file supplying defaults for any flag; explicit flags
    /// win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Seed for everything stochastic. Required by train and evaluate;
    /// identical seeds reproduce outputs byte for byte.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for treatment, forest training, and fold evaluation
    /// (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Directory receiving all output files (default: current directory).
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Preprocess a corpus into treated token streams with location
    /// mentions.
    Treat(TreatArgs),
    /// Build pattern corpora from a labeled corpus and fit one classifier.
    Train(TrainArgs),
    /// Score each location word of a corpus with a trained model.
    Predict(PredictArgs),
    /// Repeated k-fold cross-validation of classifiers and baselines.
    Evaluate(EvaluateArgs),
    /// Score the dictionary, nearest-verb, and focus heuristics alone.
    Baselines(BaselinesArgs),
    /// Re-derive plot-ready CSV files from an evaluation report.
    ExportPlots(ExportPlotsArgs),
}

#[derive(Args)]
pub struct TreatArgs {
    /// Corpus file, one JSON object per line.
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Lexicon directory (locations.tsv, stopwords.txt, category files).
    #[arg(long, value_name = "DIR")]
    lexicons: Option<PathBuf>,
}

/// Hyperparameter flags shared by train and evaluate; each applies to the
/// model family it belongs to.
#[derive(Args)]
pub struct ModelParamArgs {
    /// Trees in the random forest.
    #[arg(long)]
    trees: Option<usize>,
    /// Candidate features per split (default: square root of the feature
    /// count).
    #[arg(long)]
    features_per_split: Option<usize>,
    /// Minimum rows in a leaf.
    #[arg(long)]
    min_leaf: Option<usize>,
    /// SVM kernel; only "rbf" is supported.
    #[arg(long)]
    kernel: Option<String>,
    /// SVM box constraint.
    #[arg(long)]
    c: Option<f64>,
    /// RBF width (default: 1/feature count).
    #[arg(long)]
    gamma: Option<f64>,
    /// SVM convergence tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// SVM optimization sweep limit.
    #[arg(long)]
    max_passes: Option<u32>,
    /// Comma-separated hidden-layer sizes searched by the network, e.g.
    /// "3,5,7,9".
    #[arg(long, value_name = "LIST")]
    hidden_grid: Option<String>,
    /// Comma-separated weight-decay values searched by the network.
    #[arg(long, value_name = "LIST")]
    decay_grid: Option<String>,
    /// Gradient-descent epochs per candidate network.
    #[arg(long)]
    epochs: Option<usize>,
    /// Gradient-descent step size.
    #[arg(long)]
    learning_rate: Option<f64>,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    lexicons: Option<PathBuf>,
    /// Classifier to fit: rforest, svm, or mlp.
    #[arg(long)]
    model: Option<String>,
    /// Smallest collocation window.
    #[arg(long)]
    n_min: Option<u8>,
    /// Largest collocation window.
    #[arg(long)]
    n_max: Option<u8>,
    /// Run recursive feature elimination first and train on the retained
    /// covariates.
    #[arg(long)]
    rfe: bool,
    /// Inner story-grouped folds for feature elimination.
    #[arg(long)]
    rfe_folds: Option<usize>,
    #[command(flatten)]
    params: ModelParamArgs,
}

#[derive(Args)]
pub struct PredictArgs {
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    lexicons: Option<PathBuf>,
    /// Trained model file from `train` (config key: model-file).
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Pattern corpora file from `train`.
    #[arg(long, value_name = "FILE")]
    corpora: Option<PathBuf>,
    /// Probability cut-off for the predicted column.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    lexicons: Option<PathBuf>,
    /// Comma-separated classifiers to evaluate (default: rforest,svm,mlp).
    #[arg(long, value_name = "LIST")]
    models: Option<String>,
    /// Folds per repeat.
    #[arg(long)]
    k: Option<usize>,
    /// Number of reshuffled repeats.
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    n_min: Option<u8>,
    #[arg(long)]
    n_max: Option<u8>,
    /// Probability cut-off for fold accuracies.
    #[arg(long)]
    threshold: Option<f64>,
    #[command(flatten)]
    params: ModelParamArgs,
}

#[derive(Args)]
pub struct BaselinesArgs {
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    lexicons: Option<PathBuf>,
}

#[derive(Args)]
pub struct ExportPlotsArgs {
    /// report.json produced by `evaluate`.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(CliError::input)?,
        None => FileConfig::default(),
    };
    let jobs = cfg.setting(cli.jobs, "jobs").map_err(CliError::input)?;
    if let Some(jobs) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(CliError::input)?;
    }
    let out_dir = cfg
        .path(cli.out_dir, "out-dir")
        .map_err(CliError::input)?
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir).map_err(CliError::input)?;

    match cli.command {
        Command::Treat(args) => commands::cmd_treat(&cfg, &out_dir, args),
        Command::Train(args) => commands::cmd_train(&cfg, &out_dir, cli.seed, args),
        Command::Predict(args) => commands::cmd_predict(&cfg, &out_dir, args),
        Command::Evaluate(args) => commands::cmd_evaluate(&cfg, &out_dir, cli.seed, args),
        Command::Baselines(args) => commands::cmd_baselines(&cfg, &out_dir, args),
        Command::ExportPlots(args) => commands::cmd_export_plots(&cfg, &out_dir, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
