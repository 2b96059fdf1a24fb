//! Mini-batch training driver.

use super::net::{Loss, Mode, Network};
use super::params::sample_dropout_masks;
use super::{AdamHyper, AdamState, LayerSpec, NnError};
use crate::nn::matrix::Mat;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Settings for one training run. The seed drives everything random in the
/// run (initialization, shuffling, dropout), so equal seeds on equal data
/// give bit-identical models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamHyper,
    pub loss: Loss,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 256,
            adam: AdamHyper::default(),
            loss: Loss::MeanAbsolute,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.batch_size == 0 {
            return Err(NnError::InvalidSpec("batch_size must be positive".into()));
        }
        self.adam.validate()
    }
}

/// Mean absolute error on the training and validation sets after each epoch.
/// Both series have exactly one entry per completed epoch.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossHistory {
    pub train_mae: Vec<f64>,
    pub val_mae: Vec<f64>,
}

/// A borrowed design matrix (one standardized feature row per example) and
/// its target volumes.
#[derive(Clone, Copy)]
pub struct DatasetView<'a> {
    pub x: &'a Mat,
    pub y: &'a [f64],
}

impl<'a> DatasetView<'a> {
    pub fn new(x: &'a Mat, y: &'a [f64]) -> Self {
        DatasetView { x, y }
    }
}

/// Trains a fresh network on `train_set`, reporting per-epoch MAE on both
/// sets. The validation set only feeds the loss history; it never
/// influences parameters, so callers can pass a held-out station to watch
/// for overfitting without leaking it into the fit.
///
/// Each epoch shuffles the example order, then walks it in mini-batches.
/// Every batch draws fresh dropout masks, runs a training-mode forward pass
/// (batch statistics, inverted dropout), folds those batch statistics into
/// the running averages, and applies one Adam step.
pub fn train(
    spec: &LayerSpec,
    train_set: DatasetView,
    validation: DatasetView,
    config: &TrainConfig,
) -> Result<(Network, LossHistory), NnError> {
    spec.validate()?;
    config.validate()?;
    if spec.output_dim != 1 {
        return Err(NnError::MultiOutputTraining(spec.output_dim));
    }
    if train_set.x.rows() == 0 {
        return Err(NnError::EmptyDataset);
    }
    for (name, set) in [("training", &train_set), ("validation", &validation)] {
        if set.x.rows() != set.y.len() {
            return Err(NnError::LengthMismatch {
                context: "dataset targets",
                expected: set.x.rows(),
                got: set.y.len(),
            });
        }
        if set.x.cols() != spec.input_dim {
            return Err(NnError::InputWidth { expected: spec.input_dim, got: set.x.cols() });
        }
        if !set.x.is_finite() || set.y.iter().any(|v| !v.is_finite()) {
            let _ = name;
            return Err(NnError::NonFinite("training data"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = Network::init(spec.clone(), &mut rng)?;
    let mut adam = AdamState::new(&net.params, config.adam)?;
    let mut history = LossHistory::default();

    let n = train_set.x.rows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut batch_x = Mat::zeros(config.batch_size.min(n), spec.input_dim);
    let mut batch_y = vec![0.0; config.batch_size.min(n)];

    for _epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            if chunk.len() != batch_x.rows() {
                batch_x = Mat::zeros(chunk.len(), spec.input_dim);
                batch_y.resize(chunk.len(), 0.0);
            }
            for (r, &idx) in chunk.iter().enumerate() {
                batch_x.row_mut(r).copy_from_slice(train_set.x.row(idx));
                batch_y[r] = train_set.y[idx];
            }
            let masks = sample_dropout_masks(spec, &mut rng);
            let cache = net.forward(&batch_x, Mode::Train(&masks))?;
            net.update_running_stats(&cache);
            let grads = net.backward(&cache, &batch_y, config.loss)?;
            adam.step(&mut net.params, &grads)?;
        }
        history.train_mae.push(eval_mae(&net, train_set)?);
        history.val_mae.push(eval_mae(&net, validation)?);
    }
    Ok((net, history))
}

/// Mean absolute error of clamped evaluation-mode predictions.
pub fn eval_mae(net: &Network, set: DatasetView) -> Result<f64, NnError> {
    if set.x.rows() == 0 {
        return Ok(f64::NAN);
    }
    let preds = net.predict_batch(set.x)?;
    let sum: f64 = preds.iter().zip(set.y).map(|(p, t)| (p - t).abs()).sum();
    Ok(sum / preds.len() as f64)
}
