//! Reference estimators the network is judged against.
//!
//! * [`profile`] — the state-of-practice profiling method: spread a
//!   carriageway's AADT over the week with day factors and hourly shares
//!   learned from the training stations.
//! * [`linreg`] — ordinary least squares on the standardized features,
//!   with a whisper of ridge for rank safety.
//! * [`knn`] — brute-force k-nearest-neighbor regression.
//! * [`ensemble_average`] — pointwise mean of several prediction vectors.

pub mod knn;
pub mod linreg;
pub mod profile;

pub use knn::{knn_fit, knn_predict, KnnModel};
pub use linreg::{linreg_fit, linreg_predict, LinearModel};
pub use profile::{derive_profile_factors, estimate_profile, ProfileFactors};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("training data is empty")]
    EmptyTraining,
    #[error("design matrix has {x} rows but {y} targets")]
    LengthMismatch { x: usize, y: usize },
    #[error("feature row has {got} entries, model expects {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("no station metadata for carriageway {0}")]
    UnknownStation(String),
    #[error("no training observation falls on a {0}; profiling needs every day of the week")]
    MissingDayType(chrono::Weekday),
    #[error("no training observation carries a target volume")]
    NoTargets,
    #[error("k must be at least 1, got {0}")]
    InvalidK(usize),
    #[error("k = {k} exceeds the {n} training examples")]
    KExceedsTraining { k: usize, n: usize },
    #[error("normal equations are numerically singular")]
    SingularSystem,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid profile factors ({path}): {message}")]
    FactorsFormat { path: String, message: String },
}

/// Pointwise mean of two or more aligned prediction vectors.
pub fn ensemble_average(predictions: &[Vec<f64>]) -> Result<Vec<f64>, BaselineError> {
    if predictions.len() < 2 {
        return Err(BaselineError::EmptyTraining);
    }
    let len = predictions[0].len();
    for p in predictions {
        if p.len() != len {
            return Err(BaselineError::LengthMismatch { x: len, y: p.len() });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(BaselineError::NonFinite("ensemble member predictions"));
        }
    }
    let n = predictions.len() as f64;
    Ok((0..len).map(|i| predictions.iter().map(|p| p[i]).sum::<f64>() / n).collect())
}
