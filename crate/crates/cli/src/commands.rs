//! Implementations of the pipeline subcommands. Each returns a domain-coded
//! error so `main` can map failures onto the documented exit codes.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use eventloc_core::eval::{make_cv_plan, run_cv, EvalSpec, ModelSpec};
use eventloc_core::features::{
    assemble_dataset, CorpusLabels, Dataset, FeatureRow, PatternCorpora,
};
use eventloc_core::io::{read_corpora, read_corpus, write_corpora, write_treated};
use eventloc_core::learn::{
    baseline_predictions, classify, rfe_select, BaselineKind, FeatureAligner, ForestParams,
    MlpParams, RfeParams, SvmParams, TrainedModel, CLASS_THRESHOLD,
};
use eventloc_core::lexicon::Lexicons;
use eventloc_core::preprocess::{treat_document, Document, TreatedDocument};
use rayon::prelude::*;

use crate::config::FileConfig;
use crate::{
    BaselinesArgs, EvaluateArgs, ExportPlotsArgs, ModelParamArgs, PredictArgs, TrainArgs,
    TreatArgs,
};

/// Failure domains, one per documented non-zero exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2: unreadable or invalid inputs (corpus, lexicons, config).
    Input(anyhow::Error),
    /// Exit 3: model training failed.
    Training(anyhow::Error),
    /// Exit 4: prediction failed, e.g. model/dataset feature mismatch.
    Prediction(anyhow::Error),
    /// Exit 5: cross-validation evaluation failed.
    Evaluation(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Training(_) => 3,
            CliError::Prediction(_) => 4,
            CliError::Evaluation(_) => 5,
        }
    }

    pub fn input(err: impl Into<anyhow::Error>) -> CliError {
        CliError::Input(err.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (stage, err) = match self {
            CliError::Input(e) => ("input", e),
            CliError::Training(e) => ("training", e),
            CliError::Prediction(e) => ("prediction", e),
            CliError::Evaluation(e) => ("evaluation", e),
        };
        write!(f, "{stage}: {err:#}")
    }
}

fn load_inputs(
    cfg: &FileConfig,
    corpus: Option<PathBuf>,
    lexicons: Option<PathBuf>,
) -> Result<(Lexicons, Vec<Document>, CorpusLabels), CliError> {
    let corpus_path = cfg.required_path(corpus, "corpus").map_err(CliError::input)?;
    let lexicon_dir = cfg
        .required_path(lexicons, "lexicons")
        .map_err(CliError::input)?;
    let lexicons = Lexicons::load_dir(&lexicon_dir).map_err(CliError::input)?;
    let (documents, labels) = read_corpus(&corpus_path).map_err(CliError::input)?;
    Ok((lexicons, documents, labels))
}

fn treat_all(documents: &[Document], lexicons: &Lexicons) -> Vec<TreatedDocument> {
    documents
        .par_iter()
        .map(|d| treat_document(d, lexicons))
        .collect()
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).with_context(|| format!("cannot write {}", path.display()))
}

/// `n-min..=n-max` window range after config merge, validated against the
/// supported 2..=7 span.
fn resolve_ns(
    cfg: &FileConfig,
    n_min: Option<u8>,
    n_max: Option<u8>,
) -> Result<std::ops::RangeInclusive<u8>> {
    let lo = cfg.setting(n_min, "n-min")?.unwrap_or(2);
    let hi = cfg.setting(n_max, "n-max")?.unwrap_or(7);
    if lo < 2 || hi > 7 || lo > hi {
        return Err(anyhow!(
            "window range {lo}..={hi} must sit inside 2..=7 with n-min <= n-max"
        ));
    }
    Ok(lo..=hi)
}

/// Hyperparameters for one model family after config merge.
fn resolve_forest(cfg: &FileConfig, args: &ModelParamArgs, seed: u64) -> Result<ForestParams> {
    let defaults = ForestParams::default();
    Ok(ForestParams {
        n_trees: cfg.setting(args.trees, "trees")?.unwrap_or(defaults.n_trees),
        features_per_split: cfg.setting(args.features_per_split, "features-per-split")?,
        min_leaf: cfg
            .setting(args.min_leaf, "min-leaf")?
            .unwrap_or(defaults.min_leaf),
        seed,
    })
}

fn resolve_svm(cfg: &FileConfig, args: &ModelParamArgs) -> Result<SvmParams> {
    let defaults = SvmParams::default();
    if let Some(kernel) = cfg.setting(args.kernel.clone(), "kernel")? {
        if kernel != "rbf" {
            return Err(anyhow!("unsupported kernel {kernel:?}; only rbf is available"));
        }
    }
    Ok(SvmParams {
        c: cfg.setting(args.c, "c")?.unwrap_or(defaults.c),
        gamma: cfg.setting(args.gamma, "gamma")?,
        tol: cfg.setting(args.tol, "tol")?.unwrap_or(defaults.tol),
        max_passes: cfg
            .setting(args.max_passes, "max-passes")?
            .unwrap_or(defaults.max_passes),
    })
}

fn resolve_mlp(cfg: &FileConfig, args: &ModelParamArgs, seed: u64) -> Result<MlpParams> {
    let defaults = MlpParams::default();
    Ok(MlpParams {
        hidden_grid: cfg
            .list(args.hidden_grid.clone(), "hidden-grid")?
            .unwrap_or(defaults.hidden_grid),
        decay_grid: cfg
            .list(args.decay_grid.clone(), "decay-grid")?
            .unwrap_or(defaults.decay_grid),
        epochs: cfg.setting(args.epochs, "epochs")?.unwrap_or(defaults.epochs),
        learning_rate: cfg
            .setting(args.learning_rate, "learning-rate")?
            .unwrap_or(defaults.learning_rate),
        seed,
    })
}

fn resolve_spec(
    cfg: &FileConfig,
    name: &str,
    params: &ModelParamArgs,
    seed: u64,
) -> Result<ModelSpec> {
    match name {
        "rforest" => Ok(ModelSpec::RForest(resolve_forest(cfg, params, seed)?)),
        "svm" => Ok(ModelSpec::Svm(resolve_svm(cfg, params)?)),
        "mlp" => Ok(ModelSpec::Mlp(resolve_mlp(cfg, params, seed)?)),
        other => Err(anyhow!(
            "unknown model {other:?}; expected rforest, svm, or mlp"
        )),
    }
}

pub fn cmd_treat(cfg: &FileConfig, out_dir: &Path, args: TreatArgs) -> Result<(), CliError> {
    let (lexicons, documents, _) = load_inputs(cfg, args.corpus, args.lexicons)?;
    let treated = treat_all(&documents, &lexicons);
    let out = out_dir.join("treated.jsonl");
    write_treated(&out, &treated).map_err(CliError::input)?;
    for doc in &treated {
        let freqs: Vec<String> = doc
            .distinct_canonicals()
            .iter()
            .map(|c| format!("{c}={}", eventloc_core::features::sentence_frequency(doc, c)))
            .collect();
        println!(
            "{}: {} sentences, {} mentions{}{}",
            doc.story_id,
            doc.sentences.len(),
            doc.mentions.len(),
            if freqs.is_empty() { "" } else { "; sentence frequency " },
            freqs.join(" ")
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

/// Labeled dataset assembly shared by train and baselines.
fn build_labeled_dataset(
    treated: &[TreatedDocument],
    labels: &CorpusLabels,
    ns: std::ops::RangeInclusive<u8>,
) -> Result<(PatternCorpora, Dataset)> {
    let corpora = PatternCorpora::build(treated, labels, ns)?;
    let data = assemble_dataset(treated, &corpora, labels)?;
    Ok((corpora, data))
}

pub fn cmd_train(cfg: &FileConfig, out_dir: &Path, seed: Option<u64>, args: TrainArgs) -> Result<(), CliError> {
    let seed = cfg.required(seed, "seed").map_err(CliError::input)?;
    let (lexicons, documents, labels) = load_inputs(cfg, args.corpus, args.lexicons)?;
    if labels.is_empty() {
        return Err(CliError::input(anyhow!(
            "training needs a labeled corpus; no article carries labels"
        )));
    }
    let ns = resolve_ns(cfg, args.n_min, args.n_max).map_err(CliError::input)?;
    let model_name = cfg
        .setting(args.model.clone(), "model")
        .map_err(CliError::input)?
        .unwrap_or_else(|| "rforest".to_string());
    let spec = resolve_spec(cfg, &model_name, &args.params, seed).map_err(CliError::input)?;

    let treated = treat_all(&documents, &lexicons);
    let (corpora, mut data) =
        build_labeled_dataset(&treated, &labels, ns).map_err(CliError::Training)?;

    if cfg.switch(args.rfe, "rfe").map_err(CliError::input)? {
        let rfe_params = RfeParams {
            forest: ForestParams {
                seed: 0, // replaced per stage inside the elimination loop
                ..resolve_forest(cfg, &args.params, seed).map_err(CliError::input)?
            },
            folds: cfg
                .setting(args.rfe_folds, "rfe-folds")
                .map_err(CliError::input)?
                .unwrap_or_else(|| RfeParams::default().folds),
            seed,
        };
        let subset = rfe_select(&data, &rfe_params).map_err(|e| CliError::Training(e.into()))?;
        let out = out_dir.join("rfe.json");
        write_text(
            &out,
            &serde_json::to_string_pretty(&subset).expect("feature subset serializes"),
        )
        .map_err(CliError::input)?;
        println!(
            "feature elimination kept {} of {} covariates; wrote {}",
            subset.retained.len(),
            data.feature_names.len(),
            out.display()
        );
        data = data
            .project(&subset.retained)
            .map_err(|e| CliError::Training(e.into()))?;
    }

    let model = spec
        .train(&data, seed)
        .map_err(|e| CliError::Training(e.into()))?;
    let model_path = out_dir.join("model.json");
    write_text(
        &model_path,
        &model.to_json_string().expect("trained model serializes"),
    )
    .map_err(CliError::input)?;
    let corpora_path = out_dir.join("corpora.json");
    write_corpora(&corpora_path, &corpora).map_err(CliError::input)?;

    println!(
        "trained {} on {} rows x {} features: {}",
        model.kind(),
        data.rows.len(),
        data.feature_names.len(),
        model.params_summary()
    );
    println!("wrote {} and {}", model_path.display(), corpora_path.display());
    Ok(())
}

pub fn cmd_predict(cfg: &FileConfig, out_dir: &Path, args: PredictArgs) -> Result<(), CliError> {
    let (lexicons, documents, labels) = load_inputs(cfg, args.corpus, args.lexicons)?;
    let model_path = cfg
        .required_path(args.model, "model-file")
        .map_err(CliError::input)?;
    let corpora_path = cfg
        .required_path(args.corpora, "corpora")
        .map_err(CliError::input)?;
    let threshold = cfg
        .setting(args.threshold, "threshold")
        .map_err(CliError::input)?
        .unwrap_or(CLASS_THRESHOLD);

    let model_text = std::fs::read_to_string(&model_path)
        .with_context(|| format!("cannot read model file {}", model_path.display()))
        .map_err(CliError::Input)?;
    let model = TrainedModel::from_json_str(&model_text)
        .map_err(|e| CliError::Prediction(anyhow!(e).context("model file rejected")))?;
    let corpora = read_corpora(&corpora_path).map_err(CliError::input)?;

    let treated = treat_all(&documents, &lexicons);
    let data =
        assemble_dataset(&treated, &corpora, &labels).map_err(|e| CliError::Prediction(e.into()))?;
    let aligner = FeatureAligner::new(model.feature_names(), &data.feature_names)
        .map_err(|e| CliError::Prediction(e.into()))?;

    let mut csv = String::from("story_id,location,probability,predicted\n");
    for row in &data.rows {
        let probability = model.predict_proba(&aligner.project(&row.values));
        let predicted = classify(probability, threshold);
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.story_id, row.location, probability, predicted
        ));
    }
    let out = out_dir.join("predictions.csv");
    write_text(&out, &csv).map_err(CliError::input)?;
    println!("predicted {} rows with {}; wrote {}", data.rows.len(), model.kind(), out.display());
    Ok(())
}

pub fn cmd_evaluate(
    cfg: &FileConfig,
    out_dir: &Path,
    seed: Option<u64>,
    args: EvaluateArgs,
) -> Result<(), CliError> {
    let seed = cfg.required(seed, "seed").map_err(CliError::input)?;
    let (lexicons, documents, labels) = load_inputs(cfg, args.corpus, args.lexicons)?;
    let ns = resolve_ns(cfg, args.n_min, args.n_max).map_err(CliError::input)?;
    let k = cfg.setting(args.k, "k").map_err(CliError::input)?.unwrap_or(3);
    let repeats = cfg
        .setting(args.repeats, "repeats")
        .map_err(CliError::input)?
        .unwrap_or(3);
    let threshold = cfg
        .setting(args.threshold, "threshold")
        .map_err(CliError::input)?
        .unwrap_or(CLASS_THRESHOLD);
    let names = cfg
        .list::<String>(args.models.clone(), "models")
        .map_err(CliError::input)?
        .unwrap_or_else(|| vec!["rforest".into(), "svm".into(), "mlp".into()]);
    let mut models = Vec::new();
    for name in &names {
        // Per-fold seeds are derived inside the harness; the seed here is a
        // placeholder.
        models.push(resolve_spec(cfg, name, &args.params, 0).map_err(CliError::input)?);
    }
    let spec = EvalSpec {
        models,
        baselines: BaselineKind::ALL.to_vec(),
        ns,
        threshold,
    };

    let story_ids: Vec<String> = documents.iter().map(|d| d.story_id.clone()).collect();
    let plan =
        make_cv_plan(&story_ids, k, repeats, seed).map_err(|e| CliError::Evaluation(e.into()))?;
    let report = run_cv(&documents, &labels, &lexicons, &spec, &plan)
        .map_err(|e| CliError::Evaluation(e.into()))?;

    let files = report.write_files(out_dir).map_err(CliError::input)?;
    for (model, accuracy) in &report.mean_accuracy {
        println!("{model}: accuracy {accuracy:.4}");
    }
    for path in files {
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn cmd_baselines(cfg: &FileConfig, out_dir: &Path, args: BaselinesArgs) -> Result<(), CliError> {
    let (lexicons, documents, labels) = load_inputs(cfg, args.corpus, args.lexicons)?;
    if labels.is_empty() {
        return Err(CliError::input(anyhow!(
            "baseline scoring needs a labeled corpus; no article carries labels"
        )));
    }
    let treated = treat_all(&documents, &lexicons);
    let rows: Vec<FeatureRow> = treated
        .iter()
        .flat_map(|doc| {
            doc.distinct_canonicals()
                .into_iter()
                .map(|canonical| FeatureRow {
                    story_id: doc.story_id.clone(),
                    location: canonical.to_string(),
                    label: labels
                        .get(&doc.story_id)
                        .and_then(|m| m.get(canonical))
                        .copied(),
                    values: Vec::new(),
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let mut csv = String::from("baseline,accuracy,rows\n");
    for kind in BaselineKind::ALL {
        let preds = baseline_predictions(kind, &treated, &rows);
        let scored: Vec<(u8, u8)> = rows
            .iter()
            .zip(&preds)
            .filter_map(|(row, &p)| row.label.map(|y| (y, p)))
            .collect();
        let accuracy = if scored.is_empty() {
            f64::NAN
        } else {
            scored.iter().filter(|(y, p)| y == p).count() as f64 / scored.len() as f64
        };
        println!("{}: accuracy {:.4} over {} labeled rows", kind.name(), accuracy, scored.len());
        csv.push_str(&format!("{},{},{}\n", kind.name(), accuracy, scored.len()));
    }
    let out = out_dir.join("baselines.csv");
    write_text(&out, &csv).map_err(CliError::input)?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn cmd_export_plots(
    cfg: &FileConfig,
    out_dir: &Path,
    args: ExportPlotsArgs,
) -> Result<(), CliError> {
    let report_path = cfg
        .required_path(args.report, "report")
        .map_err(CliError::input)?;
    let body = std::fs::read_to_string(&report_path)
        .with_context(|| format!("cannot read report {}", report_path.display()))
        .map_err(CliError::Input)?;
    let report: eventloc_core::eval::EvalReport = serde_json::from_str(&body)
        .with_context(|| format!("report {} is not a valid evaluation report", report_path.display()))
        .map_err(CliError::Input)?;

    for (name, content) in [
        ("accuracy.csv", report.accuracy_csv()),
        ("roc.csv", report.roc_csv()),
        ("province_counts.csv", report.province_csv()),
    ] {
        let path = out_dir.join(name);
        write_text(&path, &content).map_err(CliError::input)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
