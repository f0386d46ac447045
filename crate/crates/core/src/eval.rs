//! Repeated article-grouped k-fold cross-validation, classification metrics
//! (accuracy, confusion, ROC points), and province-level aggregation for
//! plotting.

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{
    assemble_dataset, CorpusLabels, Dataset, FeatureError, FeatureRow, PatternCorpora,
    DEFAULT_N_RANGE,
};
use crate::learn::{
    baseline_predictions, classify, train_mlp, train_random_forest, train_svm_rbf, BaselineKind,
    ForestParams, MlpParams, SvmParams, TrainError, TrainedModel, CLASS_THRESHOLD,
};
use crate::lexicon::Lexicons;
use crate::preprocess::{treat_document, Document, TreatedDocument};
use crate::rng::{derive, rng};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{k}-fold CV needs at least {k} stories, got {got}")]
    TooFewStories { k: usize, got: usize },
    #[error("ROC needs both classes, got only class {class}")]
    SingleClass { class: u8 },
    #[error("story {story_id} is not in the CV plan")]
    PlanMismatch { story_id: String },
    #[error("repeat {repeat} fold {fold}, training {model}: {source}")]
    FoldTraining {
        repeat: usize,
        fold: usize,
        model: String,
        #[source]
        source: TrainError,
    },
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Which stories land in which fold, for every repeat.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPlan {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    /// One map per repeat: story_id → fold index in `0..k`.
    pub assignments: Vec<BTreeMap<String, usize>>,
}

impl CvPlan {
    /// Stories whose rows are tested in `(repeat, fold)`.
    pub fn test_stories(&self, repeat: usize, fold: usize) -> BTreeSet<&str> {
        self.assignments[repeat]
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(s, _)| s.as_str())
            .collect()
    }
}

/// Shuffles the distinct stories once per repeat and deals them round-robin,
/// so fold sizes differ by at most one story and every article's rows stay
/// together.
pub fn make_cv_plan(
    story_ids: &[String],
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<CvPlan, EvalError> {
    let mut distinct: Vec<&str> = Vec::new();
    for id in story_ids {
        if !distinct.contains(&id.as_str()) {
            distinct.push(id);
        }
    }
    if distinct.len() < k {
        return Err(EvalError::TooFewStories {
            k,
            got: distinct.len(),
        });
    }
    let assignments = (0..repeats)
        .map(|repeat| {
            let mut shuffled = distinct.clone();
            shuffled.shuffle(&mut rng(derive(seed, repeat as u64)));
            shuffled
                .iter()
                .enumerate()
                .map(|(i, s)| (s.to_string(), i % k))
                .collect()
        })
        .collect();
    Ok(CvPlan {
        k,
        repeats,
        seed,
        assignments,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl Confusion {
    pub fn tally(labels: &[u8], predictions: &[u8]) -> Confusion {
        let mut c = Confusion::default();
        for (&label, &pred) in labels.iter().zip(predictions) {
            match (label != 0, pred != 0) {
                (true, true) => c.true_pos += 1,
                (false, true) => c.false_pos += 1,
                (false, false) => c.true_neg += 1,
                (true, false) => c.false_neg += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    pub fn accuracy(&self) -> f64 {
        (self.true_pos + self.true_neg) as f64 / self.total() as f64
    }
}

/// One classifier to evaluate, with its hyperparameters. Seeds inside the
/// params are ignored during CV; each fold trains with a seed derived from
/// the plan.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    RForest(ForestParams),
    Svm(SvmParams),
    Mlp(MlpParams),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::RForest(_) => "rforest",
            ModelSpec::Svm(_) => "svm",
            ModelSpec::Mlp(_) => "mlp",
        }
    }

    pub fn train(&self, data: &Dataset, seed: u64) -> Result<TrainedModel, TrainError> {
        match self {
            ModelSpec::RForest(p) => {
                train_random_forest(data, &ForestParams { seed, ..p.clone() })
                    .map(TrainedModel::Forest)
            }
            ModelSpec::Svm(p) => train_svm_rbf(data, p).map(TrainedModel::Svm),
            ModelSpec::Mlp(p) => {
                train_mlp(data, &MlpParams { seed, ..p.clone() }).map(TrainedModel::Mlp)
            }
        }
    }
}

/// What to evaluate: learners, baselines, n-gram range, decision threshold.
#[derive(Debug, Clone)]
pub struct EvalSpec {
    pub models: Vec<ModelSpec>,
    pub baselines: Vec<BaselineKind>,
    pub ns: RangeInclusive<u8>,
    pub threshold: f64,
}

impl Default for EvalSpec {
    fn default() -> Self {
        EvalSpec {
            models: vec![
                ModelSpec::RForest(ForestParams::default()),
                ModelSpec::Svm(SvmParams::default()),
                ModelSpec::Mlp(MlpParams::default()),
            ],
            baselines: BaselineKind::ALL.to_vec(),
            ns: DEFAULT_N_RANGE,
            threshold: CLASS_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub model: String,
    pub repeat: usize,
    pub fold: usize,
    pub confusion: Confusion,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub model: String,
    pub repeat: usize,
    /// (FPR, TPR) pairs, anchored at (0,0) and (1,1).
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Proof that fold `fold` of repeat `repeat` trained only on its own stories:
/// the corpora digest can be recomputed from `train_stories` alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldFingerprint {
    pub repeat: usize,
    pub fold: usize,
    pub train_stories: Vec<String>,
    pub corpora_sha256: String,
}

/// Per-province positive counts: ground truth and each predictor.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvinceAggregate {
    pub ground_truth: BTreeMap<String, u64>,
    /// series name → province → predicted positive count.
    pub predicted: BTreeMap<String, BTreeMap<String, u64>>,
}

/// Counts positive labels and positive predictions per province. Rows carry
/// the canonical province in `location` (subprovince mentions already resolve
/// to their parent).
pub fn province_aggregate(
    rows: &[FeatureRow],
    predictions: &BTreeMap<String, Vec<u8>>,
) -> ProvinceAggregate {
    let mut aggregate = ProvinceAggregate::default();
    for row in rows {
        if row.label == Some(1) {
            *aggregate
                .ground_truth
                .entry(row.location.clone())
                .or_default() += 1;
        }
    }
    for (series, preds) in predictions {
        let counts = aggregate.predicted.entry(series.clone()).or_default();
        for (row, &pred) in rows.iter().zip(preds) {
            if pred == 1 {
                *counts.entry(row.location.clone()).or_default() += 1;
            }
        }
    }
    aggregate
}

/// Accuracy over rows whose article has exactly one positive label; `None`
/// when no row qualifies.
pub fn single_location_subset_accuracy(
    rows: &[FeatureRow],
    predictions: &[u8],
    labels: &CorpusLabels,
) -> Option<f64> {
    let single: BTreeSet<&str> = labels
        .iter()
        .filter(|(_, article)| article.values().filter(|&&l| l == 1).count() == 1)
        .map(|(story, _)| story.as_str())
        .collect();
    let mut correct = 0u64;
    let mut total = 0u64;
    for (row, &pred) in rows.iter().zip(predictions) {
        if single.contains(row.story_id.as_str()) {
            if let Some(label) = row.label {
                total += 1;
                correct += u64::from(label == pred);
            }
        }
    }
    (total > 0).then(|| correct as f64 / total as f64)
}

/// Fraction of articles whose rows are all predicted correctly; `None` for
/// empty input.
pub fn article_level_accuracy(rows: &[FeatureRow], predictions: &[u8]) -> Option<f64> {
    let mut all_correct: BTreeMap<&str, bool> = BTreeMap::new();
    for (row, &pred) in rows.iter().zip(predictions) {
        let ok = row.label == Some(pred);
        all_correct
            .entry(row.story_id.as_str())
            .and_modify(|c| *c &= ok)
            .or_insert(ok);
    }
    (!all_correct.is_empty())
        .then(|| all_correct.values().filter(|&&c| c).count() as f64 / all_correct.len() as f64)
}

/// ROC points from (probability, label) pairs: one point per distinct
/// threshold, anchored at (0,0), sorted by FPR with TPR non-decreasing.
pub fn roc_points(scores: &[(f64, u8)]) -> Result<Vec<(f64, f64)>, EvalError> {
    let positives = scores.iter().filter(|(_, y)| *y == 1).count();
    let negatives = scores.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClass {
            class: u8::from(negatives == 0),
        });
    }
    let mut sorted: Vec<(f64, u8)> = scores.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut i = 0;
    // Walk thresholds from high to low; everything scoring ≥ the current
    // threshold is predicted positive.
    while i < sorted.len() {
        let threshold = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == threshold {
            match sorted[i].1 {
                1 => tp += 1,
                _ => fp += 1,
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
    }
    Ok(points)
}

/// Trapezoidal area under a ROC point list.
pub fn auc(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    pub fold_scores: Vec<FoldScore>,
    /// Per-word accuracy averaged over the k·repeats fold results.
    pub mean_accuracy: BTreeMap<String, f64>,
    /// Fraction of article appearances with every row correct.
    pub article_accuracy: BTreeMap<String, f64>,
    /// Per-word accuracy over articles with exactly one true location.
    pub subset_accuracy: BTreeMap<String, f64>,
    pub roc: Vec<RocCurve>,
    pub provinces: ProvinceAggregate,
    pub fingerprints: Vec<FoldFingerprint>,
}

impl EvalReport {
    pub fn mean_accuracy_of(&self, model: &str) -> Option<f64> {
        self.mean_accuracy.get(model).copied()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `model,repeat,fold,tp,fp,tn,fn,accuracy` per fold result.
    pub fn accuracy_csv(&self) -> String {
        let mut out = String::from("model,repeat,fold,tp,fp,tn,fn,accuracy\n");
        for s in &self.fold_scores {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                s.model,
                s.repeat,
                s.fold,
                s.confusion.true_pos,
                s.confusion.false_pos,
                s.confusion.true_neg,
                s.confusion.false_neg,
                s.accuracy
            ));
        }
        out
    }

    /// `model,repeat,fpr,tpr` per ROC point.
    pub fn roc_csv(&self) -> String {
        let mut out = String::from("model,repeat,fpr,tpr\n");
        for curve in &self.roc {
            for (fpr, tpr) in &curve.points {
                out.push_str(&format!("{},{},{},{}\n", curve.model, curve.repeat, fpr, tpr));
            }
        }
        out
    }

    /// Long-format `province,series,count` with a `ground-truth` series.
    pub fn province_csv(&self) -> String {
        let mut out = String::from("province,series,count\n");
        let mut provinces: BTreeSet<&str> = self
            .provinces
            .ground_truth
            .keys()
            .map(String::as_str)
            .collect();
        for counts in self.provinces.predicted.values() {
            provinces.extend(counts.keys().map(String::as_str));
        }
        for province in provinces {
            let truth = self.provinces.ground_truth.get(province).copied().unwrap_or(0);
            out.push_str(&format!("{province},ground-truth,{truth}\n"));
            for (series, counts) in &self.provinces.predicted {
                let count = counts.get(province).copied().unwrap_or(0);
                out.push_str(&format!("{province},{series},{count}\n"));
            }
        }
        out
    }

    /// Writes `report.json`, `accuracy.csv`, `roc.csv`, `province_counts.csv`
    /// into `dir`, returning the paths.
    pub fn write_files(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let files = [
            ("report.json", self.to_json_string()),
            ("accuracy.csv", self.accuracy_csv()),
            ("roc.csv", self.roc_csv()),
            ("province_counts.csv", self.province_csv()),
        ];
        let mut paths = Vec::new();
        for (name, body) in files {
            let path = dir.join(name);
            std::fs::write(&path, body)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

/// Accumulates per-series results across folds.
#[derive(Default)]
struct Tallies {
    fold_scores: Vec<FoldScore>,
    /// (series, repeat) → pooled (probability, label) for ROC.
    roc_pool: BTreeMap<(String, usize), Vec<(f64, u8)>>,
    /// Rows of every test fold across all repeats, in evaluation order.
    pooled_rows: Vec<FeatureRow>,
    pooled_repeats: Vec<usize>,
    /// series → predictions aligned with `pooled_rows`.
    pooled_preds: BTreeMap<String, Vec<u8>>,
    fingerprints: Vec<FoldFingerprint>,
}

impl Tallies {
    fn record(
        &mut self,
        series: &str,
        repeat: usize,
        fold: usize,
        rows: &[FeatureRow],
        labels: &[u8],
        preds: Vec<u8>,
    ) {
        let confusion = Confusion::tally(labels, &preds);
        self.fold_scores.push(FoldScore {
            model: series.to_string(),
            repeat,
            fold,
            confusion,
            accuracy: confusion.accuracy(),
        });
        debug_assert_eq!(confusion.total() as usize, rows.len());
        self.pooled_preds
            .entry(series.to_string())
            .or_default()
            .extend(preds);
    }
}

/// Runs the full protocol: per (repeat, fold) build pattern corpora and
/// datasets from the training articles only, train every model, score the
/// held-out rows, then assemble pooled metrics.
pub fn run_cv(
    documents: &[Document],
    labels: &CorpusLabels,
    lexicons: &Lexicons,
    spec: &EvalSpec,
    plan: &CvPlan,
) -> Result<EvalReport, EvalError> {
    let treated: Vec<TreatedDocument> = documents
        .iter()
        .map(|d| treat_document(d, lexicons))
        .collect();
    for doc in &treated {
        if plan
            .assignments
            .iter()
            .any(|a| !a.contains_key(&doc.story_id))
        {
            return Err(EvalError::PlanMismatch {
                story_id: doc.story_id.clone(),
            });
        }
    }

    let mut tallies = Tallies::default();
    for repeat in 0..plan.repeats {
        for fold in 0..plan.k {
            let in_test = |d: &TreatedDocument| plan.assignments[repeat][&d.story_id] == fold;
            let train_docs: Vec<TreatedDocument> =
                treated.iter().filter(|d| !in_test(d)).cloned().collect();
            let test_docs: Vec<TreatedDocument> =
                treated.iter().filter(|d| in_test(d)).cloned().collect();
            if test_docs.is_empty() {
                continue;
            }

            let corpora = PatternCorpora::build(&train_docs, labels, spec.ns.clone())?;
            let train_data = assemble_dataset(&train_docs, &corpora, labels)?;
            let test_data = assemble_dataset(&test_docs, &corpora, labels)?;
            tallies.fingerprints.push(FoldFingerprint {
                repeat,
                fold,
                train_stories: train_docs.iter().map(|d| d.story_id.clone()).collect(),
                corpora_sha256: corpora.fingerprint(),
            });
            let test_labels: Vec<u8> = test_data
                .rows
                .iter()
                .map(|r| r.label.expect("assembled rows are labeled"))
                .collect();

            let fold_seed = derive(plan.seed, 1 + (repeat * plan.k + fold) as u64);
            for (m, model_spec) in spec.models.iter().enumerate() {
                let model = model_spec
                    .train(&train_data, derive(fold_seed, m as u64))
                    .map_err(|source| EvalError::FoldTraining {
                        repeat,
                        fold,
                        model: model_spec.name().to_string(),
                        source,
                    })?;
                let probs: Vec<f64> = test_data
                    .rows
                    .iter()
                    .map(|r| model.predict_proba(&r.values))
                    .collect();
                let preds: Vec<u8> = probs
                    .iter()
                    .map(|&p| classify(p, spec.threshold))
                    .collect();
                tallies
                    .roc_pool
                    .entry((model_spec.name().to_string(), repeat))
                    .or_default()
                    .extend(probs.iter().copied().zip(test_labels.iter().copied()));
                tallies.record(
                    model_spec.name(),
                    repeat,
                    fold,
                    &test_data.rows,
                    &test_labels,
                    preds,
                );
            }
            for &baseline in &spec.baselines {
                let preds = baseline_predictions(baseline, &test_docs, &test_data.rows);
                tallies.record(
                    baseline.name(),
                    repeat,
                    fold,
                    &test_data.rows,
                    &test_labels,
                    preds,
                );
            }
            tallies
                .pooled_repeats
                .extend(std::iter::repeat_n(repeat, test_data.rows.len()));
            tallies.pooled_rows.extend(test_data.rows);
        }
    }

    let mut mean_accuracy = BTreeMap::new();
    for score in &tallies.fold_scores {
        mean_accuracy
            .entry(score.model.clone())
            .or_insert_with(Vec::new)
            .push(score.accuracy);
    }
    let mean_accuracy: BTreeMap<String, f64> = mean_accuracy
        .into_iter()
        .map(|(model, accs)| {
            let mean = accs.iter().sum::<f64>() / accs.len() as f64;
            (model, mean)
        })
        .collect();

    let mut roc = Vec::new();
    for ((model, repeat), scores) in &tallies.roc_pool {
        let points = roc_points(scores)?;
        let auc = auc(&points);
        roc.push(RocCurve {
            model: model.clone(),
            repeat: *repeat,
            points,
            auc,
        });
    }

    let mut article_accuracy = BTreeMap::new();
    let mut subset_accuracy = BTreeMap::new();
    for (series, preds) in &tallies.pooled_preds {
        if let Some(acc) = single_location_subset_accuracy(&tallies.pooled_rows, preds, labels) {
            subset_accuracy.insert(series.clone(), acc);
        }
        // Article accuracy averages per repeat, so a story is judged once per
        // repeat rather than across all of them at once.
        let mut per_repeat = Vec::new();
        for repeat in 0..plan.repeats {
            let idx: Vec<usize> = (0..tallies.pooled_rows.len())
                .filter(|&i| tallies.pooled_repeats[i] == repeat)
                .collect();
            let rows: Vec<FeatureRow> =
                idx.iter().map(|&i| tallies.pooled_rows[i].clone()).collect();
            let repeat_preds: Vec<u8> = idx.iter().map(|&i| preds[i]).collect();
            if let Some(acc) = article_level_accuracy(&rows, &repeat_preds) {
                per_repeat.push(acc);
            }
        }
        if !per_repeat.is_empty() {
            article_accuracy.insert(
                series.clone(),
                per_repeat.iter().sum::<f64>() / per_repeat.len() as f64,
            );
        }
    }

    // Province counts use the first repeat, where every row is predicted
    // exactly once by the fold that held it out.
    let first_repeat_idx: Vec<usize> = (0..tallies.pooled_rows.len())
        .filter(|&i| tallies.pooled_repeats[i] == 0)
        .collect();
    let first_rows: Vec<FeatureRow> = first_repeat_idx
        .iter()
        .map(|&i| tallies.pooled_rows[i].clone())
        .collect();
    let first_preds: BTreeMap<String, Vec<u8>> = tallies
        .pooled_preds
        .iter()
        .map(|(series, preds)| {
            (
                series.clone(),
                first_repeat_idx.iter().map(|&i| preds[i]).collect(),
            )
        })
        .collect();
    let provinces = province_aggregate(&first_rows, &first_preds);

    Ok(EvalReport {
        k: plan.k,
        repeats: plan.repeats,
        seed: plan.seed,
        fold_scores: tallies.fold_scores,
        mean_accuracy,
        article_accuracy,
        subset_accuracy,
        roc,
        provinces,
        fingerprints: tallies.fingerprints,
    })
}
