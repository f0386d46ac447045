//! Versioned on-disk model format. Every trained classifier serializes to a
//! JSON envelope `{model_type, version, params, payload}` so files identify
//! themselves and reject readers that do not understand them.

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::forest::RandomForestModel;
use super::mlp::MlpModel;
use super::svm::SvmModel;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("unknown model type \"{0}\"")]
    UnknownType(String),
    #[error("unsupported model format version {0}")]
    UnknownVersion(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    RForest,
    Svm,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::RForest, ModelKind::Svm, ModelKind::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::RForest => "rforest",
            ModelKind::Svm => "svm",
            ModelKind::Mlp => "mlp",
        }
    }

    pub fn from_name(s: &str) -> Option<ModelKind> {
        match s {
            "rforest" => Some(ModelKind::RForest),
            "svm" => Some(ModelKind::Svm),
            "mlp" => Some(ModelKind::Mlp),
            _ => None,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    model_type: String,
    version: u32,
    /// Human-readable hyperparameter summary; the payload is authoritative.
    params: serde_json::Value,
    payload: serde_json::Value,
}

/// Any trained classifier, unified behind one probability interface.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Forest(RandomForestModel),
    Svm(SvmModel),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Forest(_) => ModelKind::RForest,
            TrainedModel::Svm(_) => ModelKind::Svm,
            TrainedModel::Mlp(_) => ModelKind::Mlp,
        }
    }

    /// Feature names the model was fitted on, in training order.
    pub fn feature_names(&self) -> &[String] {
        match self {
            TrainedModel::Forest(m) => &m.feature_names,
            TrainedModel::Svm(m) => &m.feature_names,
            TrainedModel::Mlp(m) => &m.feature_names,
        }
    }

    /// Probability of the positive class for a feature vector already
    /// ordered like [`feature_names`](Self::feature_names).
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        match self {
            TrainedModel::Forest(m) => m.predict_proba(x),
            TrainedModel::Svm(m) => m.predict_proba(x),
            TrainedModel::Mlp(m) => m.predict_proba(x),
        }
    }

    /// Hyperparameter digest stored in the serialized envelope and shown by
    /// reporting front ends.
    pub fn params_summary(&self) -> serde_json::Value {
        match self {
            TrainedModel::Forest(m) => json!({
                "n_trees": m.trees.len(),
                "features_per_split": m.features_per_split,
                "min_leaf": m.min_leaf,
                "seed": m.seed,
            }),
            TrainedModel::Svm(m) => json!({
                "c": m.c,
                "gamma": m.gamma,
                "support_vectors": m.support_vectors.len(),
            }),
            TrainedModel::Mlp(m) => json!({
                "hidden": m.hidden,
                "decay": m.decay,
            }),
        }
    }

    pub fn to_json(&self) -> Result<serde_json::Value, ModelIoError> {
        let payload = match self {
            TrainedModel::Forest(m) => serde_json::to_value(m)?,
            TrainedModel::Svm(m) => serde_json::to_value(m)?,
            TrainedModel::Mlp(m) => serde_json::to_value(m)?,
        };
        Ok(serde_json::to_value(Envelope {
            model_type: self.kind().as_str().to_string(),
            version: MODEL_FORMAT_VERSION,
            params: self.params_summary(),
            payload,
        })?)
    }

    pub fn to_json_string(&self) -> Result<String, ModelIoError> {
        Ok(serde_json::to_string_pretty(&self.to_json()?)?)
    }

    pub fn from_json(value: serde_json::Value) -> Result<TrainedModel, ModelIoError> {
        let envelope: Envelope = serde_json::from_value(value)?;
        if envelope.version != MODEL_FORMAT_VERSION {
            return Err(ModelIoError::UnknownVersion(envelope.version));
        }
        let kind = ModelKind::from_name(&envelope.model_type)
            .ok_or_else(|| ModelIoError::UnknownType(envelope.model_type.clone()))?;
        Ok(match kind {
            ModelKind::RForest => TrainedModel::Forest(serde_json::from_value(envelope.payload)?),
            ModelKind::Svm => TrainedModel::Svm(serde_json::from_value(envelope.payload)?),
            ModelKind::Mlp => TrainedModel::Mlp(serde_json::from_value(envelope.payload)?),
        })
    }

    pub fn from_json_str(s: &str) -> Result<TrainedModel, ModelIoError> {
        TrainedModel::from_json(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{dataset, separable_blobs};
    use super::super::{train_mlp, train_random_forest, train_svm_rbf};
    use super::super::{ForestParams, MlpParams, SvmParams};
    use super::*;
    use rand::Rng;

    fn trained_models() -> Vec<TrainedModel> {
        let (x, y) = separable_blobs(20, 3);
        let data = dataset(&x, &y);
        let forest = train_random_forest(
            &data,
            &ForestParams {
                n_trees: 10,
                ..ForestParams::default()
            },
        )
        .unwrap();
        let svm = train_svm_rbf(&data, &SvmParams::default()).unwrap();
        let mlp = train_mlp(
            &data,
            &MlpParams {
                hidden_grid: vec![3],
                decay_grid: vec![0.0],
                epochs: 200,
                ..MlpParams::default()
            },
        )
        .unwrap();
        vec![
            TrainedModel::Forest(forest),
            TrainedModel::Svm(svm),
            TrainedModel::Mlp(mlp),
        ]
    }

    #[test]
    fn round_trip_preserves_predictions_and_bytes() {
        let mut rng = crate::rng::rng(11);
        let probes: Vec<Vec<f64>> = (0..20)
            .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        for model in trained_models() {
            let text = model.to_json_string().unwrap();
            let restored = TrainedModel::from_json_str(&text).unwrap();
            assert_eq!(restored.kind(), model.kind());
            assert_eq!(restored.feature_names(), model.feature_names());
            for probe in &probes {
                assert_eq!(restored.predict_proba(probe), model.predict_proba(probe));
            }
            // Serialization itself is deterministic.
            assert_eq!(restored.to_json_string().unwrap(), text);
        }
    }

    #[test]
    fn envelope_names_the_model_type_and_version() {
        for model in trained_models() {
            let value = model.to_json().unwrap();
            assert_eq!(value["model_type"], model.kind().as_str());
            assert_eq!(value["version"], MODEL_FORMAT_VERSION);
            assert!(value["params"].is_object());
        }
    }

    #[test]
    fn unknown_type_and_version_are_rejected() {
        let model = &trained_models()[0];
        let mut value = model.to_json().unwrap();
        value["model_type"] = "boosted".into();
        assert!(matches!(
            TrainedModel::from_json(value.clone()),
            Err(ModelIoError::UnknownType(t)) if t == "boosted"
        ));
        let mut value = model.to_json().unwrap();
        value["version"] = 99.into();
        assert!(matches!(
            TrainedModel::from_json(value),
            Err(ModelIoError::UnknownVersion(99))
        ));
    }

    #[test]
    fn kind_strings_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(ModelKind::from_name(kind.as_str()), Some(kind));
        }
        assert_eq!(ModelKind::from_name("nope"), None);
    }
}
