//! A from-scratch feedforward network for hourly volume regression.
//!
//! The network is a plain multilayer perceptron trained with mini-batch
//! Adam. Hidden layers share one activation (ELU by default), may carry
//! batch normalization inserted before the activation, and are subject to
//! inverted dropout during training. The output layer is a single identity
//! unit, and predictions are clamped to be non-negative because a volume
//! cannot be negative.
//!
//! Nothing here is generic over a tensor library on purpose: the point is a
//! small, fully inspectable implementation whose gradients can be checked
//! against finite differences (see the acceptance suite).

mod activation;
mod adam;
mod matrix;
mod net;
mod params;
mod train;

pub use activation::{elu, elu_derivative, sigmoid, sigmoid_derivative, Activation};
pub use adam::{AdamHyper, AdamState};
pub use matrix::Mat;
pub use net::{ForwardCache, Loss, Mode, Network};
pub use params::{
    sample_dropout_masks, BatchNorm, DropoutMasks, Gradients, LayerParams, NetworkParams,
};
pub use train::{train, DatasetView, LossHistory, TrainConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Numerical stabilizer inside the batch-norm standard deviation.
pub const BN_EPSILON: f64 = 1e-5;

/// Exponential decay applied to batch-norm running statistics: after each
/// training batch, `running = BN_MOMENTUM * running + (1 - BN_MOMENTUM) * batch`.
pub const BN_MOMENTUM: f64 = 0.99;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid layer spec: {0}")]
    InvalidSpec(String),
    #[error("input has {got} features but the network expects {expected}")]
    InputWidth { expected: usize, got: usize },
    #[error("{context}: expected {expected} values, got {got}")]
    LengthMismatch { context: &'static str, expected: usize, got: usize },
    #[error("training requires a single output unit, spec has {0}")]
    MultiOutputTraining(usize),
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

/// Architecture and regularization settings for a [`Network`].
///
/// `activation` applies to hidden layers only; the output layer is always
/// identity. `keep_prob` is the probability that a hidden unit survives
/// dropout, so `1.0` disables dropout entirely.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    pub activation: Activation,
    pub use_batchnorm: bool,
    pub keep_prob: f64,
}

impl LayerSpec {
    /// The configuration used for the volume model: three hidden layers of
    /// 256 ELU units with batch normalization, dropout keep probability 0.5,
    /// and a single regression output.
    pub fn new(input_dim: usize) -> Self {
        LayerSpec {
            input_dim,
            hidden_dims: vec![256, 256, 256],
            output_dim: 1,
            activation: Activation::Elu { alpha: 1.0 },
            use_batchnorm: true,
            keep_prob: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.input_dim == 0 {
            return Err(NnError::InvalidSpec("input_dim must be positive".into()));
        }
        if self.output_dim == 0 {
            return Err(NnError::InvalidSpec("output_dim must be positive".into()));
        }
        if self.hidden_dims.iter().any(|&d| d == 0) {
            return Err(NnError::InvalidSpec("hidden layer widths must be positive".into()));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return Err(NnError::InvalidSpec(format!(
                "keep_prob must lie in (0, 1], got {}",
                self.keep_prob
            )));
        }
        match self.activation {
            Activation::Elu { alpha } if !(alpha.is_finite() && alpha > 0.0) => {
                return Err(NnError::InvalidSpec(format!("ELU alpha must be positive, got {alpha}")));
            }
            Activation::Sigmoid { lambda } if !(lambda.is_finite() && lambda > 0.0) => {
                return Err(NnError::InvalidSpec(format!(
                    "sigmoid lambda must be positive, got {lambda}"
                )));
            }
            _ => {}
        }
        Ok(())
    }

    /// Unit counts per layer from input to output, e.g. `[84, 256, 256, 256, 1]`.
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(self.output_dim);
        dims
    }

    /// Number of weight layers (hidden layers plus the output layer).
    pub fn n_weight_layers(&self) -> usize {
        self.hidden_dims.len() + 1
    }
}
