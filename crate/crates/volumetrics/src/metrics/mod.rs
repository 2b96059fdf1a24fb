//! Accuracy measures for hourly volume estimates.
//!
//! Four measures are reported everywhere in the evaluation harness:
//!
//! * [`r_squared`] — coefficient of determination against the mean.
//! * [`mape`] — mean absolute percentage error, excluding zero-volume hours
//!   (division by the target) but reporting how many were excluded.
//! * [`etcr`] — error-to-capacity ratio: mean absolute error as a percentage
//!   of the carriageway's capacity, which makes errors comparable across
//!   roads of very different size.
//! * [`emfr`] — error-to-maximum-flow ratio: mean absolute error as a
//!   percentage of the largest observed volume on that carriageway.
//!
//! The capacity denominator for ETCR comes from [`CapacityTable`].

mod capacity;
mod wilcoxon;

pub use capacity::{CapacityRow, CapacityTable, Facility};
pub use wilcoxon::{
    wilcoxon_signed_rank, wilcoxon_signed_rank_with, WilcoxonMethod, WilcoxonResult,
    EXACT_N_LIMIT, MIN_NONZERO_DIFFERENCES,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("actual and predicted lengths differ: {actual} vs {predicted}")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("cannot compute a metric over zero points")]
    Empty,
    #[error("non-finite value in metric input")]
    NonFinite,
    #[error("actual volumes have zero variance, R-squared is undefined")]
    ZeroVariance,
    #[error("all actual volumes are zero, MAPE is undefined")]
    AllTargetsZero,
    #[error("maximum actual volume is zero, EMFR is undefined")]
    MaxTargetZero,
    #[error("capacity must be positive, got {capacity} x {lanes} lanes")]
    InvalidCapacity { capacity: f64, lanes: u32 },
    #[error("free-flow speed must be positive and finite, got {0}")]
    InvalidFreeFlowSpeed(f64),
    #[error("signed-rank test needs at least {min} non-zero differences, got {got}")]
    TooFewDifferences { min: usize, got: usize },
    #[error("io error reading capacity table {path}: {source}")]
    TableIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid capacity table ({origin}): {message}")]
    TableParse { origin: String, message: String },
}

fn check_pair(actual: &[f64], predicted: &[f64]) -> Result<(), MetricsError> {
    if actual.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch { actual: actual.len(), predicted: predicted.len() });
    }
    if actual.is_empty() {
        return Err(MetricsError::Empty);
    }
    if actual.iter().chain(predicted).any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    Ok(())
}

/// Coefficient of determination:
/// `1 - sum((y - y_hat)^2) / sum((y - mean(y))^2)`.
///
/// Errors if the actual values are constant, where the ratio is undefined.
pub fn r_squared(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    check_pair(actual, predicted)?;
    let n = actual.len() as f64;
    let mean = actual.iter().sum::<f64>() / n;
    let sst: f64 = actual.iter().map(|y| (y - mean).powi(2)).sum();
    if sst == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    let sse: f64 = actual.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    Ok(1.0 - sse / sst)
}

/// Mean absolute percentage error, as a percentage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapeResult {
    /// `100 / n * sum(|y - y_hat| / y)` over the `n` hours with `y != 0`.
    pub percent: f64,
    /// Hours included in the mean.
    pub n_used: usize,
    /// Zero-volume hours excluded from the mean.
    pub n_excluded_zero_targets: usize,
}

/// Mean absolute percentage error. Hours with an actual volume of zero are
/// excluded from the mean (the ratio is undefined there) and counted in the
/// result; if every hour is zero the measure itself is undefined.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<MapeResult, MetricsError> {
    check_pair(actual, predicted)?;
    let mut sum = 0.0;
    let mut n_used = 0usize;
    for (y, p) in actual.iter().zip(predicted) {
        if *y == 0.0 {
            continue;
        }
        sum += ((y - p) / y).abs();
        n_used += 1;
    }
    if n_used == 0 {
        return Err(MetricsError::AllTargetsZero);
    }
    Ok(MapeResult {
        percent: 100.0 * sum / n_used as f64,
        n_used,
        n_excluded_zero_targets: actual.len() - n_used,
    })
}

/// Error-to-capacity ratio, as a percentage:
/// `100 / n * sum(|y - y_hat|) / (capacity_per_lane * lanes)`.
pub fn etcr(
    actual: &[f64],
    predicted: &[f64],
    capacity_per_lane: f64,
    lanes: u32,
) -> Result<f64, MetricsError> {
    check_pair(actual, predicted)?;
    if !(capacity_per_lane.is_finite() && capacity_per_lane > 0.0) || lanes == 0 {
        return Err(MetricsError::InvalidCapacity { capacity: capacity_per_lane, lanes });
    }
    let capacity = capacity_per_lane * f64::from(lanes);
    let mean_abs: f64 =
        actual.iter().zip(predicted).map(|(y, p)| (y - p).abs()).sum::<f64>() / actual.len() as f64;
    Ok(100.0 * mean_abs / capacity)
}

/// Error-to-maximum-flow ratio, as a percentage:
/// `100 / n * sum(|y - y_hat|) / max(y)`.
pub fn emfr(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    check_pair(actual, predicted)?;
    let max = actual.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        return Err(MetricsError::MaxTargetZero);
    }
    let mean_abs: f64 =
        actual.iter().zip(predicted).map(|(y, p)| (y - p).abs()).sum::<f64>() / actual.len() as f64;
    Ok(100.0 * mean_abs / max)
}

/// All four measures for one carriageway.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub r_squared: f64,
    pub mape_percent: f64,
    pub etcr_percent: f64,
    pub emfr_percent: f64,
    pub n_hours: usize,
    pub n_zero_target_hours: usize,
}

/// Computes the four measures in one pass over a carriageway's hours.
pub fn metric_report(
    actual: &[f64],
    predicted: &[f64],
    capacity_per_lane: f64,
    lanes: u32,
) -> Result<MetricReport, MetricsError> {
    let mape = mape(actual, predicted)?;
    Ok(MetricReport {
        r_squared: r_squared(actual, predicted)?,
        mape_percent: mape.percent,
        etcr_percent: etcr(actual, predicted, capacity_per_lane, lanes)?,
        emfr_percent: emfr(actual, predicted)?,
        n_hours: actual.len(),
        n_zero_target_hours: mape.n_excluded_zero_targets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Shared worked example. With actual = [100, 200, 400, 0] and
    // predicted = [110, 190, 360, 20]:
    //   errors        = [10, 10, 40, 20], mean 20
    //   MAPE          = 100 * (0.1 + 0.05 + 0.1) / 3 = 8.333...% (zero excluded)
    //   mean(y) = 175, SST = 75^2 + 25^2 + 225^2 + 175^2 = 87500
    //   SSE = 100 + 100 + 1600 + 400 = 2200, R^2 = 1 - 2200/87500
    //   ETCR @ 2300 x 2 = 100 * 20 / 4600
    //   EMFR          = 100 * 20 / 400 = 5
    const ACTUAL: [f64; 4] = [100.0, 200.0, 400.0, 0.0];
    const PREDICTED: [f64; 4] = [110.0, 190.0, 360.0, 20.0];

    #[test]
    fn r_squared_matches_hand_computation() {
        let r2 = r_squared(&ACTUAL, &PREDICTED).unwrap();
        assert_relative_eq!(r2, 1.0 - 2200.0 / 87500.0, epsilon = 1e-12);
        assert_relative_eq!(r2, 0.974_857_142_857_142_9, epsilon = 1e-12);
    }

    #[test]
    fn mape_excludes_and_counts_zero_targets() {
        let m = mape(&ACTUAL, &PREDICTED).unwrap();
        assert_relative_eq!(m.percent, 25.0 / 3.0, epsilon = 1e-12);
        assert_eq!(m.n_used, 3);
        assert_eq!(m.n_excluded_zero_targets, 1);
    }

    #[test]
    fn etcr_matches_hand_computation() {
        let e = etcr(&ACTUAL, &PREDICTED, 2300.0, 2).unwrap();
        assert_relative_eq!(e, 2000.0 / 4600.0, epsilon = 1e-12);
    }

    #[test]
    fn emfr_matches_hand_computation() {
        assert_relative_eq!(emfr(&ACTUAL, &PREDICTED).unwrap(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn perfect_predictions_score_perfectly() {
        let y = [120.0, 340.0, 90.0];
        assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
        assert_eq!(mape(&y, &y).unwrap().percent, 0.0);
        assert_eq!(etcr(&y, &y, 2400.0, 3).unwrap(), 0.0);
        assert_eq!(emfr(&y, &y).unwrap(), 0.0);
    }

    #[test]
    fn r_squared_can_be_negative_for_bad_predictors() {
        // Predicting far from the data is worse than predicting the mean.
        let y = [1.0, 2.0, 3.0];
        let p = [10.0, 10.0, 10.0];
        assert!(r_squared(&y, &p).unwrap() < 0.0);
    }

    #[test]
    fn constant_actuals_make_r_squared_undefined() {
        let err = r_squared(&[5.0, 5.0, 5.0], &[5.0, 5.0, 5.0]).unwrap_err();
        assert!(matches!(err, MetricsError::ZeroVariance));
    }

    #[test]
    fn all_zero_actuals_make_mape_undefined() {
        let err = mape(&[0.0, 0.0], &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, MetricsError::AllTargetsZero));
        assert!(matches!(emfr(&[0.0, 0.0], &[1.0, 2.0]), Err(MetricsError::MaxTargetZero)));
    }

    #[test]
    fn mape_is_scale_invariant() {
        let y: Vec<f64> = ACTUAL.iter().map(|v| v * 37.5).collect();
        let p: Vec<f64> = PREDICTED.iter().map(|v| v * 37.5).collect();
        assert_relative_eq!(
            mape(&y, &p).unwrap().percent,
            mape(&ACTUAL, &PREDICTED).unwrap().percent,
            epsilon = 1e-12
        );
    }

    #[test]
    fn etcr_rejects_nonsensical_capacity() {
        assert!(etcr(&ACTUAL, &PREDICTED, 0.0, 2).is_err());
        assert!(etcr(&ACTUAL, &PREDICTED, 2300.0, 0).is_err());
        assert!(etcr(&ACTUAL, &PREDICTED, -5.0, 2).is_err());
    }

    #[test]
    fn mismatched_and_empty_inputs_are_errors() {
        assert!(matches!(r_squared(&[1.0], &[1.0, 2.0]), Err(MetricsError::LengthMismatch { .. })));
        assert!(matches!(mape(&[], &[]), Err(MetricsError::Empty)));
        assert!(matches!(r_squared(&[1.0, f64::NAN], &[1.0, 2.0]), Err(MetricsError::NonFinite)));
    }

    #[test]
    fn report_bundles_the_individual_measures() {
        let report = metric_report(&ACTUAL, &PREDICTED, 2300.0, 2).unwrap();
        assert_eq!(report.r_squared, r_squared(&ACTUAL, &PREDICTED).unwrap());
        assert_eq!(report.mape_percent, mape(&ACTUAL, &PREDICTED).unwrap().percent);
        assert_eq!(report.etcr_percent, etcr(&ACTUAL, &PREDICTED, 2300.0, 2).unwrap());
        assert_eq!(report.emfr_percent, emfr(&ACTUAL, &PREDICTED).unwrap());
        assert_eq!(report.n_hours, 4);
        assert_eq!(report.n_zero_target_hours, 1);
    }
}
