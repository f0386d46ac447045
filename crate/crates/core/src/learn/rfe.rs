//! Recursive feature elimination driven by forest permutation importance:
//! repeatedly drop the least important feature, scoring every candidate
//! subset by story-grouped inner cross-validation.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::forest::{train_random_forest, ForestParams};
use super::TrainError;
use crate::features::Dataset;
use crate::rng::{derive, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeParams {
    /// Forest configuration reused for importance and scoring fits; its
    /// seed field is replaced by derived per-stage seeds.
    pub forest: ForestParams,
    /// Inner CV folds (story-grouped).
    pub folds: usize,
    pub seed: u64,
}

impl Default for RfeParams {
    fn default() -> Self {
        RfeParams {
            forest: ForestParams {
                n_trees: 100,
                ..ForestParams::default()
            },
            folds: 3,
            seed: 0,
        }
    }
}

/// Elimination outcome: the winning subset plus the accuracy trajectory for
/// every candidate size from p down to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSubset {
    pub retained: Vec<String>,
    /// (subset size, inner-CV accuracy), largest size first.
    pub accuracy_by_size: Vec<(usize, f64)>,
}

/// Story-grouped k-fold accuracy of a forest on `data`. Folds whose training
/// half collapses to one class predict that class outright.
fn story_cv_accuracy(data: &Dataset, params: &RfeParams, seed: u64) -> Result<f64, TrainError> {
    let mut stories: Vec<&str> = Vec::new();
    for row in &data.rows {
        if !stories.contains(&row.story_id.as_str()) {
            stories.push(&row.story_id);
        }
    }
    let k = params.folds.min(stories.len()).max(1);
    let mut shuffled = stories;
    shuffled.shuffle(&mut rng(derive(seed, 0)));
    let fold_of = |story: &str| -> usize {
        shuffled.iter().position(|s| *s == story).unwrap() % k
    };

    let mut correct = 0usize;
    let mut total = 0usize;
    for fold in 0..k {
        let train_rows: Vec<_> = data
            .rows
            .iter()
            .filter(|r| fold_of(&r.story_id) != fold)
            .cloned()
            .collect();
        let test_rows: Vec<_> = data
            .rows
            .iter()
            .filter(|r| fold_of(&r.story_id) == fold)
            .cloned()
            .collect();
        if test_rows.is_empty() {
            continue;
        }
        let train = Dataset {
            feature_names: data.feature_names.clone(),
            rows: train_rows,
            provenance: data.provenance.clone(),
        };
        let labels: Vec<u8> = train.rows.iter().filter_map(|r| r.label).collect();
        let constant_class = match (labels.contains(&0), labels.contains(&1)) {
            (true, false) => Some(0u8),
            (false, true) => Some(1u8),
            (false, false) => Some(1u8),
            (true, true) => None,
        };
        let predictions: Vec<u8> = match constant_class {
            Some(c) => vec![c; test_rows.len()],
            None => {
                let forest_params = ForestParams {
                    seed: derive(seed, 1 + fold as u64),
                    ..params.forest.clone()
                };
                let model = train_random_forest(&train, &forest_params)?;
                test_rows
                    .iter()
                    .map(|r| u8::from(model.predict_proba(&r.values) >= 0.5))
                    .collect()
            }
        };
        for (row, pred) in test_rows.iter().zip(predictions) {
            if let Some(label) = row.label {
                total += 1;
                correct += usize::from(label == pred);
            }
        }
    }
    Ok(if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    })
}

/// Permutation importance of every feature: accuracy drop on the training
/// rows after shuffling that column.
fn permutation_importance(
    data: &Dataset,
    params: &RfeParams,
    seed: u64,
) -> Result<Vec<f64>, TrainError> {
    let forest_params = ForestParams {
        seed: derive(seed, 0),
        ..params.forest.clone()
    };
    let model = train_random_forest(data, &forest_params)?;
    let accuracy = |rows: &[Vec<f64>]| -> f64 {
        rows.iter()
            .zip(&data.rows)
            .filter(|(x, row)| {
                row.label == Some(u8::from(model.predict_proba(x) >= 0.5))
            })
            .count() as f64
            / data.rows.len() as f64
    };
    let base_rows: Vec<Vec<f64>> = data.rows.iter().map(|r| r.values.clone()).collect();
    let baseline = accuracy(&base_rows);
    let mut importances = Vec::with_capacity(data.feature_names.len());
    for f in 0..data.feature_names.len() {
        let mut column: Vec<f64> = base_rows.iter().map(|r| r[f]).collect();
        column.shuffle(&mut rng(derive(seed, 1 + f as u64)));
        let mut permuted = base_rows.clone();
        for (row, v) in permuted.iter_mut().zip(column) {
            row[f] = v;
        }
        importances.push(baseline - accuracy(&permuted));
    }
    Ok(importances)
}

/// Backward elimination over all features. Returns the subset with the best
/// inner-CV accuracy; on ties the smaller subset wins.
pub fn rfe_select(data: &Dataset, params: &RfeParams) -> Result<FeatureSubset, TrainError> {
    if data.feature_names.len() < 2 {
        return Err(TrainError::NoFeatures);
    }
    let mut current: Vec<String> = data.feature_names.clone();
    let mut trajectory: Vec<(usize, f64)> = Vec::new();
    let mut best: Option<(f64, Vec<String>)> = None;
    let mut stage = 0u64;
    while !current.is_empty() {
        let sub = data.project(&current).expect("retained features exist");
        let acc = story_cv_accuracy(&sub, params, derive(params.seed, 2 * stage))?;
        trajectory.push((current.len(), acc));
        // Sizes shrink monotonically, so replace-on-≥ prefers the smaller
        // subset when accuracies tie.
        if best.as_ref().is_none_or(|(a, _)| acc >= *a) {
            best = Some((acc, current.clone()));
        }
        if current.len() == 1 {
            break;
        }
        let importances = permutation_importance(&sub, params, derive(params.seed, 2 * stage + 1))?;
        let drop_idx = importances
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        current.remove(drop_idx);
        stage += 1;
    }
    let (_, retained) = best.expect("at least one candidate subset");
    Ok(FeatureSubset {
        retained,
        accuracy_by_size: trajectory,
    })
}
