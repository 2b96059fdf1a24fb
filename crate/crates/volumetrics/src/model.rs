//! Persistence for a trained estimator.
//!
//! A [`TrainedModel`] bundles the network with the standardizer fit on
//! its training fold, because predictions are only meaningful when the
//! inputs pass through the same standardization. The pair is saved as a
//! single JSON document with a format marker and version so a stale or
//! foreign file is reported as such instead of as a parse error.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{layout, FeatureError, FeatureVector, Standardizer};
use crate::nn::{Network, NnError};

/// Value of the `format` field in a saved model file.
pub const MODEL_FORMAT: &str = "volumetrics-model";
/// Version written by this build; readers refuse any other version.
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not a model file: {message}")]
    NotAModelFile { path: String, message: String },
    #[error("{path} has model version {got}, this build reads version {supported}")]
    UnsupportedVersion { path: String, got: u64, supported: u32 },
    #[error("invalid model in {path}: {message}")]
    InvalidModel { path: String, message: String },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Network(#[from] NnError),
}

/// A network plus the standardizer its inputs must pass through.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub network: Network,
    pub standardizer: Standardizer,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: TrainedModel,
}

impl TrainedModel {
    pub fn new(network: Network, standardizer: Standardizer) -> Self {
        TrainedModel { network, standardizer }
    }

    /// Standardizes raw feature rows and predicts, clamping at zero.
    pub fn predict(&self, raw: &[FeatureVector]) -> Result<Vec<f64>, ModelError> {
        let standardized = self.standardizer.apply_matrix(raw)?;
        Ok(self.network.predict_batch(&standardized)?)
    }

    /// Writes the model as pretty-printed JSON.
    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file).map_err(|e| ModelError::InvalidModel {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|source| ModelError::Io { path: path.display().to_string(), source })
    }

    /// Reads a model file, checking the format marker and version before
    /// touching the payload.
    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ModelError::Io { path: display.clone(), source })?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| ModelError::NotAModelFile { path: display.clone(), message: e.to_string() })?;
        match value.get("format").and_then(serde_json::Value::as_str) {
            Some(MODEL_FORMAT) => {}
            Some(other) => {
                return Err(ModelError::NotAModelFile {
                    path: display,
                    message: format!("format field is {other:?}"),
                })
            }
            None => {
                return Err(ModelError::NotAModelFile {
                    path: display,
                    message: "missing format field".to_string(),
                })
            }
        }
        match value.get("version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(MODEL_VERSION) => {}
            Some(v) => {
                return Err(ModelError::UnsupportedVersion {
                    path: display,
                    got: v,
                    supported: MODEL_VERSION,
                })
            }
            None => {
                return Err(ModelError::NotAModelFile {
                    path: display,
                    message: "missing version field".to_string(),
                })
            }
        }
        let file: ModelFile = serde_json::from_value(value)
            .map_err(|e| ModelError::InvalidModel { path: display.clone(), message: e.to_string() })?;
        let model = file.model;
        let invalid = |message: String| ModelError::InvalidModel { path: display.clone(), message };
        if model.network.spec.input_dim != layout::LEN {
            return Err(invalid(format!(
                "network expects {} inputs, the feature layout has {}",
                model.network.spec.input_dim,
                layout::LEN
            )));
        }
        if !model.standardizer.is_well_formed() {
            return Err(invalid("standardizer parameters are malformed".to_string()));
        }
        if !model.network.params.is_finite() {
            return Err(invalid("network parameters are not finite".to_string()));
        }
        Ok(model)
    }
}
