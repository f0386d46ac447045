//! From-scratch classifiers (random forest, RBF SVM, MLP), feature
//! elimination, and the comparison baselines.
//!
//! All trainers are deterministic given `(data, params, seed)`; trained
//! models are immutable and safe to share across prediction threads.

pub mod baselines;
pub mod forest;
pub mod mlp;
pub mod model;
pub mod rfe;
pub mod svm;

use crate::features::Dataset;

pub use baselines::{baseline_predictions, focus_baseline, nearest_verb_baseline, BaselineKind};
pub use forest::{train_random_forest, ForestParams, RandomForestModel};
pub use mlp::{train_mlp, MlpModel, MlpNet, MlpParams};
pub use model::{ModelKind, TrainedModel};
pub use rfe::{rfe_select, FeatureSubset, RfeParams};
pub use svm::{max_kkt_violation, train_svm_rbf, SvmModel, SvmParams};

/// Default decision threshold on predicted probabilities.
pub const CLASS_THRESHOLD: f64 = 0.5;

/// Thresholded class decision: positive iff probability ≥ threshold.
pub fn classify(probability: f64, threshold: f64) -> u8 {
    u8::from(probability >= threshold)
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("training data has {got} usable rows, need at least {needed}")]
    TooFewRows { needed: usize, got: usize },
    #[error("training data contains only class {class}")]
    SingleClass { class: u8 },
    #[error("row ({story_id}, {location}) has no label")]
    UnlabeledRow { story_id: String, location: String },
    #[error("SMO did not converge within {passes} passes (max KKT violation {violation:.6})")]
    NonConvergence { passes: u32, violation: f64 },
    #[error("gradient descent diverged: loss became {loss}")]
    Diverged { loss: f64 },
    #[error("dataset has no features")]
    NoFeatures,
}

#[derive(Debug, thiserror::Error)]
pub enum PredictError {
    #[error("row is missing feature \"{name}\" required by the model")]
    MissingFeature { name: String },
}

/// Extracts the labeled feature matrix; any unlabeled row is an error.
pub(crate) fn labeled_xy(data: &Dataset) -> Result<(Vec<Vec<f64>>, Vec<u8>), TrainError> {
    let mut x = Vec::with_capacity(data.rows.len());
    let mut y = Vec::with_capacity(data.rows.len());
    for row in &data.rows {
        match row.label {
            Some(l) => {
                x.push(row.values.clone());
                y.push(u8::from(l != 0));
            }
            None => {
                return Err(TrainError::UnlabeledRow {
                    story_id: row.story_id.clone(),
                    location: row.location.clone(),
                })
            }
        }
    }
    Ok((x, y))
}

pub(crate) fn require_both_classes(y: &[u8]) -> Result<(), TrainError> {
    match (y.contains(&0), y.contains(&1)) {
        (true, true) => Ok(()),
        (false, false) => Err(TrainError::TooFewRows { needed: 2, got: 0 }),
        (has_zero, _) => Err(TrainError::SingleClass {
            class: u8::from(!has_zero),
        }),
    }
}

/// Maps a model's feature order onto a dataset's column order once, so rows
/// can be projected cheaply during prediction.
#[derive(Debug)]
pub struct FeatureAligner {
    indices: Vec<usize>,
}

impl FeatureAligner {
    pub fn new(model_features: &[String], dataset_names: &[String]) -> Result<Self, PredictError> {
        let indices = model_features
            .iter()
            .map(|name| {
                dataset_names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| PredictError::MissingFeature { name: name.clone() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FeatureAligner { indices })
    }

    pub fn project(&self, values: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&i| values[i]).collect()
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use crate::features::{Dataset, FeatureRow};

    /// Wraps a raw matrix as a Dataset with one story per row.
    pub fn dataset(x: &[Vec<f64>], y: &[u8]) -> Dataset {
        let p = x.first().map_or(0, Vec::len);
        Dataset {
            feature_names: (0..p).map(|i| format!("f{i}")).collect(),
            rows: x
                .iter()
                .zip(y)
                .enumerate()
                .map(|(i, (values, label))| FeatureRow {
                    story_id: format!("s{i}"),
                    location: format!("loc{i}"),
                    label: Some(*label),
                    values: values.clone(),
                })
                .collect(),
            provenance: String::new(),
        }
    }

    /// Two diagonal blobs in the unit square, linearly separable with margin.
    pub fn separable_blobs(n_per_class: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        use rand::Rng;
        let mut rng = crate::rng::rng(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..2 * n_per_class {
            let label = u8::from(i % 2 == 1);
            let center = if label == 1 { 0.75 } else { 0.25 };
            x.push(vec![
                center + rng.random_range(-0.15..0.15),
                center + rng.random_range(-0.15..0.15),
            ]);
            y.push(label);
        }
        (x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_thresholds_inclusively() {
        assert_eq!(classify(0.5, 0.5), 1);
        assert_eq!(classify(0.49, 0.5), 0);
        assert_eq!(classify(0.3, 0.3), 1);
    }

    #[test]
    fn complementary_thresholds_partition_exactly() {
        // Predicting the negative class from the complement probability with
        // the complement threshold flips every decision, boundary included.
        let mut p = 0.0;
        while p <= 1.0 {
            let mut t = 0.0;
            while t <= 1.0 {
                let positive = classify(p, t) == 1;
                let negative_view = (1.0 - p) > (1.0 - t);
                assert_ne!(positive, negative_view, "p={p} t={t}");
                t += 0.07;
            }
            p += 0.051;
        }
    }

    #[test]
    fn aligner_reorders_and_reports_missing() {
        let model_features = vec!["b".to_string(), "a".to_string()];
        let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let aligner = FeatureAligner::new(&model_features, &names).unwrap();
        assert_eq!(aligner.project(&[1.0, 2.0, 3.0]), vec![2.0, 1.0]);
        let err = FeatureAligner::new(&["zz".to_string()], &names).unwrap_err();
        assert!(err.to_string().contains("zz"));
    }

    #[test]
    fn class_checks() {
        assert!(require_both_classes(&[0, 1]).is_ok());
        assert!(matches!(
            require_both_classes(&[1, 1]),
            Err(TrainError::SingleClass { class: 1 })
        ));
        assert!(matches!(
            require_both_classes(&[0]),
            Err(TrainError::SingleClass { class: 0 })
        ));
    }
}
