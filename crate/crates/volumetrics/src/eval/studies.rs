//! Training-dynamics studies: overfitting curves and the effect of
//! dropout.
//!
//! Both studies reuse the fold machinery so their numbers are directly
//! comparable with an ordinary cross-validation run at the same seed.

use super::{
    fold_seed, run_cv, standardized_split, train_config, CvConfig, CvResult, Dataset, EvalError,
    Method,
};
use crate::features::FeatureVector;
use crate::nn::{train, DatasetView, LossHistory};

/// Per-epoch loss curves for a single train/holdout split, with a linear
/// trend fitted to the tail of each curve.
#[derive(Clone, Debug, PartialEq)]
pub struct OverfitStudy {
    /// The held-out station.
    pub station_id: String,
    pub history: LossHistory,
    pub final_train_mae: f64,
    pub final_val_mae: f64,
    /// Validation minus training MAE at the last epoch.
    pub final_gap: f64,
    /// Epochs in the fitted tail window (the last quarter, at least 4).
    pub tail_epochs: usize,
    pub train_tail_slope: f64,
    pub train_tail_t: f64,
    pub val_tail_slope: f64,
    pub val_tail_t: f64,
    /// True when the validation tail rises with a t statistic above 2,
    /// the usual signature of a network that has started memorizing.
    pub val_rising: bool,
}

/// Ordinary least-squares trend over equally spaced values: returns the
/// per-step slope and its t statistic. A perfectly linear input has an
/// infinite t; fewer than three values are an error.
pub fn trend_slope(values: &[f64]) -> Result<(f64, f64), EvalError> {
    let n = values.len();
    if n < 3 {
        return Err(EvalError::InvalidConfig(format!(
            "trend needs at least 3 values, got {n}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(EvalError::InvalidConfig("trend over non-finite values".into()));
    }
    let nf = n as f64;
    let x_mean = (nf - 1.0) / 2.0;
    let y_mean = values.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (i, &y) in values.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxx += dx * dx;
        sxy += dx * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let sse: f64 = values
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let r = y - (intercept + slope * i as f64);
            r * r
        })
        .sum();
    let variance = sse / (nf - 2.0);
    let standard_error = (variance / sxx).sqrt();
    let t = if standard_error == 0.0 {
        match slope.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => f64::INFINITY,
            Some(std::cmp::Ordering::Less) => f64::NEG_INFINITY,
            _ => 0.0,
        }
    } else {
        slope / standard_error
    };
    Ok((slope, t))
}

/// Trains one network on every station except `station_id` and watches
/// the held-out MAE epoch by epoch. The network method, widths, epochs
/// and seed all come from `config`; at least 8 epochs are required so
/// the tail trend has something to fit.
pub fn overfit_study(
    dataset: &Dataset,
    config: &CvConfig,
    station_id: &str,
) -> Result<OverfitStudy, EvalError> {
    let use_batchnorm = match config.method {
        Method::Ann { use_batchnorm } => use_batchnorm,
        other => {
            return Err(EvalError::InvalidConfig(format!(
                "the overfit study trains a single network, not {other}"
            )))
        }
    };
    config.validate()?;
    if config.epochs < 8 {
        return Err(EvalError::InvalidConfig(format!(
            "overfit study needs at least 8 epochs, got {}",
            config.epochs
        )));
    }
    let meta = dataset.check_ready()?;
    let station_ids = dataset.station_ids();
    let fold_index = station_ids
        .iter()
        .position(|s| s == station_id)
        .ok_or_else(|| EvalError::UnknownStation(station_id.to_string()))?;
    if station_ids.len() < 2 {
        return Err(EvalError::TooFewStations(station_ids.len()));
    }

    let features: Vec<FeatureVector> = dataset
        .observations
        .iter()
        .map(|obs| {
            let key = super::carriageway_key(&obs.station_id, obs.direction);
            crate::features::assemble(obs, meta[&key], &dataset.holidays)
        })
        .collect::<Result<_, _>>()?;
    let targets: Vec<f64> = dataset
        .observations
        .iter()
        .map(|o| o.target_volume.expect("checked by check_ready"))
        .collect();
    let (train_idx, test_idx): (Vec<usize>, Vec<usize>) = (0..dataset.observations.len())
        .partition(|&i| dataset.observations[i].station_id != station_id);
    let (x_train, y_train, x_test) =
        standardized_split(&features, &targets, &train_idx, &test_idx)?;
    let y_test: Vec<f64> = test_idx.iter().map(|&i| targets[i]).collect();

    let seed = fold_seed(config.base_seed, fold_index, 0);
    let (_, history) = train(
        &super::network_spec(config, use_batchnorm),
        DatasetView::new(&x_train, &y_train),
        DatasetView::new(&x_test, &y_test),
        &train_config(config, seed),
    )?;

    let tail_epochs = (config.epochs / 4).max(4);
    let train_tail = &history.train_mae[config.epochs - tail_epochs..];
    let val_tail = &history.val_mae[config.epochs - tail_epochs..];
    let (train_tail_slope, train_tail_t) = trend_slope(train_tail)?;
    let (val_tail_slope, val_tail_t) = trend_slope(val_tail)?;
    let final_train_mae = *history.train_mae.last().expect("at least 8 epochs");
    let final_val_mae = *history.val_mae.last().expect("at least 8 epochs");
    Ok(OverfitStudy {
        station_id: station_id.to_string(),
        final_train_mae,
        final_val_mae,
        final_gap: final_val_mae - final_train_mae,
        tail_epochs,
        train_tail_slope,
        train_tail_t,
        val_tail_slope,
        val_tail_t,
        val_rising: val_tail_slope > 0.0 && val_tail_t > 2.0,
        history,
    })
}

/// One side of the dropout comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutArm {
    pub keep_prob: f64,
    /// Median fold-training MAPE over carriageways. Both carriageways
    /// of a fold share the fold's training error.
    pub median_train_mape: f64,
    /// Median held-out MAPE over carriageways.
    pub median_test_mape: f64,
    /// Test minus train medians; the generalization gap.
    pub gap: f64,
    pub result: CvResult,
}

/// The same cross-validation run with and without dropout.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutStudy {
    pub with_dropout: DropoutArm,
    pub without_dropout: DropoutArm,
}

fn median_of(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    super::median(&values)
}

fn arm(dataset: &Dataset, config: &CvConfig) -> Result<DropoutArm, EvalError> {
    let result = run_cv(dataset, config)?;
    let train: Vec<f64> = result
        .outcomes
        .iter()
        .map(|o| {
            o.fold_train_mape_percent.ok_or_else(|| {
                EvalError::InvalidConfig("network folds always report training MAPE".into())
            })
        })
        .collect::<Result<_, _>>()?;
    let test: Vec<f64> = result.outcomes.iter().map(|o| o.report.mape_percent).collect();
    let median_train_mape = median_of(train);
    let median_test_mape = median_of(test);
    Ok(DropoutArm {
        keep_prob: config.keep_prob,
        median_train_mape,
        median_test_mape,
        gap: median_test_mape - median_train_mape,
        result,
    })
}

/// Runs the full cross-validation twice from identical seeds, once with
/// the configured keep probability and once with dropout disabled, so
/// the only difference between the arms is the dropout mask.
pub fn dropout_study(dataset: &Dataset, config: &CvConfig) -> Result<DropoutStudy, EvalError> {
    if !matches!(config.method, Method::Ann { .. }) {
        return Err(EvalError::InvalidConfig(format!(
            "the dropout study compares network runs, not {}",
            config.method
        )));
    }
    if config.keep_prob >= 1.0 {
        return Err(EvalError::InvalidConfig(
            "the dropout arm needs keep_prob below 1".into(),
        ));
    }
    config.validate()?;
    let without = CvConfig { keep_prob: 1.0, ..config.clone() };
    Ok(DropoutStudy {
        with_dropout: arm(dataset, config)?,
        without_dropout: arm(dataset, &without)?,
    })
}
