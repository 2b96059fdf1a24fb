//! Network parameters, their initialization, and dropout mask sampling.

use super::{LayerSpec, NnError};
use crate::nn::matrix::Mat;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Batch normalization state for one hidden layer.
///
/// `gamma` and `beta` are learned; the running statistics are exponential
/// averages of batch statistics, updated during training and used verbatim
/// in evaluation mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl BatchNorm {
    fn identity(width: usize) -> Self {
        BatchNorm {
            gamma: vec![1.0; width],
            beta: vec![0.0; width],
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
        }
    }
}

/// Weights and bias of one fully-connected layer, plus optional batch norm.
///
/// `weights` is stored `fan_out x fan_in`, so row `j` holds the incoming
/// weights of output unit `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub weights: Mat,
    pub bias: Vec<f64>,
    pub batchnorm: Option<BatchNorm>,
}

/// All learnable state of a network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub layers: Vec<LayerParams>,
}

impl NetworkParams {
    /// He-uniform initialization: weights drawn from
    /// `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`, biases zero, batch-norm
    /// scale one and shift zero.
    pub fn init(spec: &LayerSpec, rng: &mut impl Rng) -> Result<Self, NnError> {
        spec.validate()?;
        let dims = spec.layer_dims();
        let n_layers = spec.n_weight_layers();
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            let weights = Mat::from_fn(fan_out, fan_in, |_, _| rng.random_range(-bound..bound));
            let is_hidden = l < n_layers - 1;
            layers.push(LayerParams {
                weights,
                bias: vec![0.0; fan_out],
                batchnorm: (is_hidden && spec.use_batchnorm).then(|| BatchNorm::identity(fan_out)),
            });
        }
        Ok(NetworkParams { layers })
    }

    /// True when every weight, bias, and batch-norm entry is finite.
    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.is_finite()
                && l.bias.iter().all(|b| b.is_finite())
                && l.batchnorm.as_ref().is_none_or(|bn| {
                    bn.gamma.iter().chain(&bn.beta).chain(&bn.running_mean).chain(&bn.running_var).all(|x| x.is_finite())
                })
        })
    }

    /// Total number of learnable scalars (running statistics excluded).
    pub fn n_learnable(&self) -> usize {
        self.layers
            .iter()
            .map(|l| {
                l.weights.data().len()
                    + l.bias.len()
                    + l.batchnorm.as_ref().map_or(0, |bn| bn.gamma.len() + bn.beta.len())
            })
            .sum()
    }
}

/// Gradients (or any other per-parameter quantity, such as Adam moments)
/// shaped exactly like the learnable part of [`NetworkParams`].
///
/// Running batch-norm statistics have no entries here: they are not trained
/// by gradient descent.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrads {
    pub weights: Mat,
    pub bias: Vec<f64>,
    pub gamma: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
}

impl Gradients {
    /// Zero gradients matching the shape of `params`.
    pub fn zeros_like(params: &NetworkParams) -> Self {
        Gradients {
            layers: params
                .layers
                .iter()
                .map(|l| LayerGrads {
                    weights: Mat::zeros(l.weights.rows(), l.weights.cols()),
                    bias: vec![0.0; l.bias.len()],
                    gamma: l.batchnorm.as_ref().map(|bn| vec![0.0; bn.gamma.len()]),
                    beta: l.batchnorm.as_ref().map(|bn| vec![0.0; bn.beta.len()]),
                })
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.is_finite()
                && l.bias.iter().all(|b| b.is_finite())
                && l.gamma.as_ref().is_none_or(|g| g.iter().all(|x| x.is_finite()))
                && l.beta.as_ref().is_none_or(|b| b.iter().all(|x| x.is_finite()))
        })
    }
}

/// One Bernoulli mask per hidden layer, entries 1.0 (kept) or 0.0 (dropped).
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMasks {
    pub masks: Vec<Vec<f64>>,
}

/// Samples a fresh set of hidden-layer dropout masks, each entry kept with
/// probability `spec.keep_prob`.
///
/// Masks are per-unit, shared across the rows of a batch, which matches the
/// inverted-dropout scheme used by the trainer: kept activations are divided
/// by the keep probability so evaluation needs no rescaling.
pub fn sample_dropout_masks(spec: &LayerSpec, rng: &mut impl Rng) -> DropoutMasks {
    DropoutMasks {
        masks: spec
            .hidden_dims
            .iter()
            .map(|&w| {
                (0..w)
                    .map(|_| if rng.random::<f64>() < spec.keep_prob { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_spec() -> LayerSpec {
        LayerSpec {
            input_dim: 5,
            hidden_dims: vec![8, 6],
            output_dim: 1,
            activation: crate::nn::Activation::Elu { alpha: 1.0 },
            use_batchnorm: true,
            keep_prob: 0.5,
        }
    }

    #[test]
    fn init_shapes_follow_the_spec() {
        let spec = small_spec();
        let params = NetworkParams::init(&spec, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(params.layers.len(), 3);
        assert_eq!((params.layers[0].weights.rows(), params.layers[0].weights.cols()), (8, 5));
        assert_eq!((params.layers[1].weights.rows(), params.layers[1].weights.cols()), (6, 8));
        assert_eq!((params.layers[2].weights.rows(), params.layers[2].weights.cols()), (1, 6));
        assert!(params.layers[0].batchnorm.is_some());
        assert!(params.layers[1].batchnorm.is_some());
        assert!(params.layers[2].batchnorm.is_none(), "output layer never has batch norm");
    }

    #[test]
    fn init_respects_he_uniform_bounds() {
        let spec = small_spec();
        let params = NetworkParams::init(&spec, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        for layer in &params.layers {
            let bound = (6.0 / layer.weights.cols() as f64).sqrt();
            assert!(layer.weights.data().iter().all(|w| w.abs() < bound));
            assert!(layer.bias.iter().all(|&b| b == 0.0));
        }
        // With 94 weights in the first two layers, all landing in one half of
        // the support has probability 2^-94; a degenerate RNG would fail here.
        let first = &params.layers[0].weights;
        assert!(first.data().iter().any(|&w| w > 0.0));
        assert!(first.data().iter().any(|&w| w < 0.0));
    }

    #[test]
    fn init_is_deterministic_in_the_seed() {
        let spec = small_spec();
        let a = NetworkParams::init(&spec, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = NetworkParams::init(&spec, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let c = NetworkParams::init(&spec, &mut ChaCha8Rng::seed_from_u64(43)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn gradients_mirror_learnable_shapes_only() {
        let spec = small_spec();
        let params = NetworkParams::init(&spec, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let grads = Gradients::zeros_like(&params);
        assert_eq!(grads.layers.len(), params.layers.len());
        assert!(grads.layers[0].gamma.is_some());
        assert!(grads.layers[2].gamma.is_none());
        let learnable: usize = grads
            .layers
            .iter()
            .map(|l| {
                l.weights.data().len()
                    + l.bias.len()
                    + l.gamma.as_ref().map_or(0, Vec::len)
                    + l.beta.as_ref().map_or(0, Vec::len)
            })
            .sum();
        assert_eq!(learnable, params.n_learnable());
    }

    #[test]
    fn dropout_masks_are_binary_and_sized_per_hidden_layer() {
        let spec = small_spec();
        let masks = sample_dropout_masks(&spec, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(masks.masks.len(), 2);
        assert_eq!(masks.masks[0].len(), 8);
        assert_eq!(masks.masks[1].len(), 6);
        assert!(masks.masks.iter().flatten().all(|&m| m == 0.0 || m == 1.0));
    }

    #[test]
    fn keep_prob_one_keeps_every_unit() {
        let mut spec = small_spec();
        spec.keep_prob = 1.0;
        let masks = sample_dropout_masks(&spec, &mut ChaCha8Rng::seed_from_u64(5));
        assert!(masks.masks.iter().flatten().all(|&m| m == 1.0));
    }

    #[test]
    fn keep_rate_concentrates_near_keep_prob() {
        let mut spec = small_spec();
        spec.hidden_dims = vec![10_000];
        spec.keep_prob = 0.7;
        let masks = sample_dropout_masks(&spec, &mut ChaCha8Rng::seed_from_u64(9));
        let kept: f64 = masks.masks[0].iter().sum();
        let rate = kept / 10_000.0;
        // Binomial(10000, 0.7) has sd ~ 0.0046; 5 sd is a comfortable margin.
        assert!((rate - 0.7).abs() < 0.023, "kept rate {rate} too far from 0.7");
    }
}
