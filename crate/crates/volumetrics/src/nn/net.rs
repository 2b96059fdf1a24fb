//! Batched forward and backward passes.

use super::params::{DropoutMasks, Gradients, LayerGrads};
use super::{LayerSpec, NetworkParams, NnError, BN_EPSILON, BN_MOMENTUM};
use crate::nn::matrix::Mat;
use crate::nn::Activation;
use serde::{Deserialize, Serialize};

/// Whether a pass runs with training behavior (dropout applied, batch-norm
/// batch statistics) or inference behavior (no dropout, running statistics).
#[derive(Clone, Copy, Debug)]
pub enum Mode<'a> {
    Train(&'a DropoutMasks),
    Eval,
}

/// Training objective. Mean absolute error is the default because hourly
/// volumes are heavy-tailed and MAE tolerates the occasional extreme hour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    MeanAbsolute,
    MeanSquared,
}

impl Loss {
    /// Mean per-example loss over a batch of scalar outputs.
    pub fn value(self, outputs: &[f64], targets: &[f64]) -> f64 {
        let n = outputs.len() as f64;
        let sum: f64 = outputs
            .iter()
            .zip(targets)
            .map(|(o, t)| match self {
                Loss::MeanAbsolute => (o - t).abs(),
                Loss::MeanSquared => (o - t) * (o - t),
            })
            .sum();
        sum / n
    }

    /// Gradient of the mean loss with respect to one output.
    fn output_grad(self, output: f64, target: f64, n: f64) -> f64 {
        match self {
            // Subgradient 0 at the kink; signum(0.0) would be 1.0.
            Loss::MeanAbsolute if output == target => 0.0,
            Loss::MeanAbsolute => (output - target).signum() / n,
            Loss::MeanSquared => 2.0 * (output - target) / n,
        }
    }
}

struct BnCache {
    z_hat: Mat,
    inv_std: Vec<f64>,
    // Batch statistics when `from_batch`, running statistics otherwise.
    mean: Vec<f64>,
    var: Vec<f64>,
    from_batch: bool,
}

/// Everything the backward pass needs, captured during [`Network::forward`].
///
/// The cache records the masks and mode that were actually used, so a
/// forward/backward mode mismatch cannot be expressed.
pub struct ForwardCache {
    inputs: Vec<Mat>,
    pre_activations: Vec<Mat>,
    bn: Vec<Option<BnCache>>,
    masks: Option<DropoutMasks>,
    outputs: Mat,
}

impl ForwardCache {
    /// Network outputs for the batch, one row per input row.
    pub fn outputs(&self) -> &Mat {
        &self.outputs
    }
}

/// A feedforward network: architecture plus current parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub spec: LayerSpec,
    pub params: NetworkParams,
}

impl Network {
    /// Freshly initialized network (He-uniform weights, zero biases).
    pub fn init(spec: LayerSpec, rng: &mut impl rand::Rng) -> Result<Self, NnError> {
        let params = NetworkParams::init(&spec, rng)?;
        Ok(Network { spec, params })
    }

    fn check_input(&self, x: &Mat) -> Result<(), NnError> {
        if x.cols() != self.spec.input_dim {
            return Err(NnError::InputWidth { expected: self.spec.input_dim, got: x.cols() });
        }
        if !x.is_finite() {
            return Err(NnError::NonFinite("network input"));
        }
        Ok(())
    }

    fn check_masks(&self, masks: &DropoutMasks) -> Result<(), NnError> {
        if masks.masks.len() != self.spec.hidden_dims.len() {
            return Err(NnError::LengthMismatch {
                context: "dropout masks",
                expected: self.spec.hidden_dims.len(),
                got: masks.masks.len(),
            });
        }
        for (mask, &width) in masks.masks.iter().zip(&self.spec.hidden_dims) {
            if mask.len() != width {
                return Err(NnError::LengthMismatch {
                    context: "dropout mask width",
                    expected: width,
                    got: mask.len(),
                });
            }
        }
        Ok(())
    }

    /// Runs the batch `x` (one example per row) through the network.
    ///
    /// In [`Mode::Train`], hidden activations are multiplied by the given
    /// dropout masks and divided by the keep probability (inverted dropout),
    /// and batch normalization uses batch statistics. In [`Mode::Eval`] the
    /// pass is a plain forward evaluation with running statistics.
    pub fn forward(&self, x: &Mat, mode: Mode) -> Result<ForwardCache, NnError> {
        self.check_input(x)?;
        let masks = match mode {
            Mode::Train(m) => {
                self.check_masks(m)?;
                Some(m.clone())
            }
            Mode::Eval => None,
        };
        let n_layers = self.spec.n_weight_layers();
        let mut inputs = Vec::with_capacity(n_layers);
        let mut pre_activations = Vec::with_capacity(n_layers);
        let mut bn_caches = Vec::with_capacity(n_layers);

        let mut current = x.clone();
        for (l, layer) in self.params.layers.iter().enumerate() {
            let is_output = l == n_layers - 1;
            // z = current * W^T + b
            let mut z = current.matmul_nt(&layer.weights);
            for r in 0..z.rows() {
                for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
                    *v += b;
                }
            }
            inputs.push(current);

            let (u, bn_cache) = match &layer.batchnorm {
                Some(bn) => {
                    let (mean, var, from_batch) = match masks {
                        Some(_) => (column_means(&z), None, true),
                        None => (bn.running_mean.clone(), Some(bn.running_var.clone()), false),
                    };
                    let var = var.unwrap_or_else(|| column_vars(&z, &mean));
                    let inv_std: Vec<f64> =
                        var.iter().map(|&v| 1.0 / (v + BN_EPSILON).sqrt()).collect();
                    let mut z_hat = z;
                    for r in 0..z_hat.rows() {
                        let row = z_hat.row_mut(r);
                        for j in 0..row.len() {
                            row[j] = (row[j] - mean[j]) * inv_std[j];
                        }
                    }
                    let u = Mat::from_fn(z_hat.rows(), z_hat.cols(), |r, c| {
                        bn.gamma[c] * z_hat[(r, c)] + bn.beta[c]
                    });
                    (u, Some(BnCache { z_hat, inv_std, mean, var, from_batch }))
                }
                None => (z, None),
            };
            bn_caches.push(bn_cache);

            let activation = if is_output { Activation::Identity } else { self.spec.activation };
            let mut out = u.map(|v| activation.apply(v));
            pre_activations.push(u);

            if !is_output {
                if let Some(masks) = &masks {
                    let mask = &masks.masks[l];
                    let keep = self.spec.keep_prob;
                    for r in 0..out.rows() {
                        for (v, m) in out.row_mut(r).iter_mut().zip(mask) {
                            *v *= m / keep;
                        }
                    }
                }
            }
            current = out;
        }

        if !current.is_finite() {
            return Err(NnError::NonFinite("network output"));
        }
        Ok(ForwardCache { inputs, pre_activations, bn: bn_caches, masks, outputs: current })
    }

    /// Gradients of the mean batch loss with respect to every learnable
    /// parameter, using the cached intermediates of a forward pass.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        targets: &[f64],
        loss: Loss,
    ) -> Result<Gradients, NnError> {
        if self.spec.output_dim != 1 {
            return Err(NnError::MultiOutputTraining(self.spec.output_dim));
        }
        let batch = cache.outputs.rows();
        if targets.len() != batch {
            return Err(NnError::LengthMismatch {
                context: "targets",
                expected: batch,
                got: targets.len(),
            });
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(NnError::NonFinite("targets"));
        }

        let n_layers = self.spec.n_weight_layers();
        let n = batch as f64;
        // Gradient with respect to the output layer's (identity) activation.
        let mut upstream = Mat::from_fn(batch, 1, |r, _| {
            loss.output_grad(cache.outputs[(r, 0)], targets[r], n)
        });

        let mut layer_grads: Vec<LayerGrads> = Vec::with_capacity(n_layers);
        for l in (0..n_layers).rev() {
            let is_output = l == n_layers - 1;
            let layer = &self.params.layers[l];

            // Undo dropout and the activation to reach the pre-activation u.
            let delta_u = if is_output {
                upstream
            } else {
                let mut g = upstream;
                if let Some(masks) = &cache.masks {
                    let mask = &masks.masks[l];
                    let keep = self.spec.keep_prob;
                    for r in 0..g.rows() {
                        for (v, m) in g.row_mut(r).iter_mut().zip(mask.iter()) {
                            *v *= m / keep;
                        }
                    }
                }
                let u = &cache.pre_activations[l];
                for r in 0..g.rows() {
                    let row = g.row_mut(r);
                    for (j, v) in row.iter_mut().enumerate() {
                        *v *= self.spec.activation.derivative(u[(r, j)]);
                    }
                }
                g
            };

            // Through batch normalization, if present.
            let (delta_z, g_gamma, g_beta) = match (&layer.batchnorm, &cache.bn[l]) {
                (Some(bn), Some(bnc)) => {
                    let (dz, dg, db) = bn_backward(&delta_u, bnc, &bn.gamma);
                    (dz, Some(dg), Some(db))
                }
                (None, None) => (delta_u, None, None),
                _ => unreachable!("cache layers always align with parameter layers"),
            };

            let weights_grad = delta_z.matmul_tn(&cache.inputs[l]);
            let mut bias_grad = vec![0.0; layer.bias.len()];
            for r in 0..delta_z.rows() {
                for (b, v) in bias_grad.iter_mut().zip(delta_z.row(r)) {
                    *b += v;
                }
            }
            upstream = delta_z.matmul(&layer.weights);
            layer_grads.push(LayerGrads { weights: weights_grad, bias: bias_grad, gamma: g_gamma, beta: g_beta });
        }

        layer_grads.reverse();
        let grads = Gradients { layers: layer_grads };
        if !grads.is_finite() {
            return Err(NnError::NonFinite("gradients"));
        }
        Ok(grads)
    }

    /// Folds a training batch's batch-norm statistics into the running
    /// averages. Call after a [`Mode::Train`] forward pass; evaluation-mode
    /// caches carry no batch statistics and are skipped.
    pub fn update_running_stats(&mut self, cache: &ForwardCache) {
        for (layer, bnc) in self.params.layers.iter_mut().zip(&cache.bn) {
            if let (Some(bn), Some(bnc)) = (layer.batchnorm.as_mut(), bnc.as_ref()) {
                if !bnc.from_batch {
                    continue;
                }
                for j in 0..bn.running_mean.len() {
                    bn.running_mean[j] = BN_MOMENTUM * bn.running_mean[j] + (1.0 - BN_MOMENTUM) * bnc.mean[j];
                    bn.running_var[j] = BN_MOMENTUM * bn.running_var[j] + (1.0 - BN_MOMENTUM) * bnc.var[j];
                }
            }
        }
    }

    /// Volume estimate for one standardized feature row: an evaluation-mode
    /// forward pass with the output clamped at zero, since a negative
    /// vehicle count is meaningless.
    pub fn predict(&self, x: &[f64]) -> Result<f64, NnError> {
        let input = Mat::from_rows(&[x]);
        let cache = self.forward(&input, Mode::Eval)?;
        Ok(cache.outputs()[(0, 0)].max(0.0))
    }

    /// [`Network::predict`] over a batch, one estimate per input row.
    pub fn predict_batch(&self, x: &Mat) -> Result<Vec<f64>, NnError> {
        let cache = self.forward(x, Mode::Eval)?;
        Ok((0..x.rows()).map(|r| cache.outputs()[(r, 0)].max(0.0)).collect())
    }
}

fn column_means(m: &Mat) -> Vec<f64> {
    let mut means = vec![0.0; m.cols()];
    for r in 0..m.rows() {
        for (s, v) in means.iter_mut().zip(m.row(r)) {
            *s += v;
        }
    }
    let n = m.rows() as f64;
    means.iter_mut().for_each(|s| *s /= n);
    means
}

/// Biased (population) column variances, matching the batch-norm convention.
fn column_vars(m: &Mat, means: &[f64]) -> Vec<f64> {
    let mut vars = vec![0.0; m.cols()];
    for r in 0..m.rows() {
        for (j, v) in m.row(r).iter().enumerate() {
            let d = v - means[j];
            vars[j] += d * d;
        }
    }
    let n = m.rows() as f64;
    vars.iter_mut().for_each(|s| *s /= n);
    vars
}

/// Backpropagation through `u = gamma * z_hat + beta`.
///
/// When the cache holds batch statistics, the mean and variance are
/// themselves functions of `z` and contribute the two correction terms of
/// the standard fused formula. With running statistics (evaluation mode)
/// they are constants and only the direct scaling survives.
fn bn_backward(delta_u: &Mat, cache: &BnCache, gamma: &[f64]) -> (Mat, Vec<f64>, Vec<f64>) {
    let (rows, cols) = (delta_u.rows(), delta_u.cols());
    let m = rows as f64;
    let mut g_gamma = vec![0.0; cols];
    let mut g_beta = vec![0.0; cols];
    for r in 0..rows {
        for (j, v) in delta_u.row(r).iter().enumerate() {
            g_gamma[j] += v * cache.z_hat[(r, j)];
            g_beta[j] += v;
        }
    }

    let delta_z = if cache.from_batch {
        Mat::from_fn(rows, cols, |r, j| {
            let g_xhat = delta_u[(r, j)] * gamma[j];
            let term = m * g_xhat - g_beta[j] * gamma[j] - cache.z_hat[(r, j)] * g_gamma[j] * gamma[j];
            cache.inv_std[j] / m * term
        })
    } else {
        Mat::from_fn(rows, cols, |r, j| delta_u[(r, j)] * gamma[j] * cache.inv_std[j])
    };
    (delta_z, g_gamma, g_beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{sample_dropout_masks, Activation};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(hidden: Vec<usize>, batchnorm: bool, keep_prob: f64) -> LayerSpec {
        LayerSpec {
            input_dim: 4,
            hidden_dims: hidden,
            output_dim: 1,
            activation: Activation::Elu { alpha: 1.0 },
            use_batchnorm: batchnorm,
            keep_prob,
        }
    }

    fn batch(rng: &mut ChaCha8Rng, rows: usize) -> Mat {
        Mat::from_fn(rows, 4, |_, _| rng.random_range(-1.5..1.5))
    }

    #[test]
    fn single_unit_identity_network_is_affine() {
        // No hidden layers: the network is y = w . x + b.
        let spec = LayerSpec {
            input_dim: 3,
            hidden_dims: vec![],
            output_dim: 1,
            activation: Activation::Identity,
            use_batchnorm: false,
            keep_prob: 1.0,
        };
        let mut net = Network::init(spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        net.params.layers[0].weights = Mat::from_rows(&[&[1.0, -2.0, 0.5]]);
        net.params.layers[0].bias = vec![3.0];
        let x = Mat::from_rows(&[&[2.0, 1.0, 4.0]]);
        let cache = net.forward(&x, Mode::Eval).unwrap();
        assert_eq!(cache.outputs()[(0, 0)], 2.0 - 2.0 + 2.0 + 3.0);
    }

    #[test]
    fn train_with_keep_prob_one_matches_eval_without_batchnorm() {
        let spec = spec(vec![16, 16], false, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Network::init(spec.clone(), &mut rng).unwrap();
        let x = batch(&mut rng, 7);
        let masks = sample_dropout_masks(&spec, &mut rng);
        let train = net.forward(&x, Mode::Train(&masks)).unwrap();
        let eval = net.forward(&x, Mode::Eval).unwrap();
        assert_eq!(train.outputs(), eval.outputs());
    }

    #[test]
    fn eval_ignores_dropout_masks_entirely() {
        let spec = spec(vec![12], false, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Network::init(spec.clone(), &mut rng).unwrap();
        let x = batch(&mut rng, 5);
        let a = net.forward(&x, Mode::Eval).unwrap();
        let b = net.forward(&x, Mode::Eval).unwrap();
        assert_eq!(a.outputs(), b.outputs());
    }

    #[test]
    fn dropped_units_do_not_influence_the_output() {
        // Zero a unit's mask and perturb its outgoing weights: in train mode
        // the output must not change, because the unit's activation is zeroed.
        let spec = spec(vec![6], false, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net = Network::init(spec.clone(), &mut rng).unwrap();
        let x = batch(&mut rng, 3);
        let masks = DropoutMasks { masks: vec![vec![1.0, 0.0, 1.0, 1.0, 0.0, 1.0]] };
        let before = net.forward(&x, Mode::Train(&masks)).unwrap();
        net.params.layers[1].weights[(0, 1)] += 100.0;
        net.params.layers[1].weights[(0, 4)] -= 55.0;
        let after = net.forward(&x, Mode::Train(&masks)).unwrap();
        assert_eq!(before.outputs(), after.outputs());
    }

    #[test]
    fn inverted_dropout_rescales_kept_units() {
        // One hidden unit kept with keep_prob p: the kept path is scaled by
        // 1/p in train mode relative to eval mode on a linear network.
        let spec = LayerSpec {
            input_dim: 1,
            hidden_dims: vec![1],
            output_dim: 1,
            activation: Activation::Identity,
            use_batchnorm: false,
            keep_prob: 0.25,
        };
        let mut net = Network::init(spec, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        net.params.layers[0].weights = Mat::from_rows(&[&[2.0]]);
        net.params.layers[1].weights = Mat::from_rows(&[&[3.0]]);
        let x = Mat::from_rows(&[&[1.0]]);
        let masks = DropoutMasks { masks: vec![vec![1.0]] };
        let train = net.forward(&x, Mode::Train(&masks)).unwrap();
        let eval = net.forward(&x, Mode::Eval).unwrap();
        assert_relative_eq!(train.outputs()[(0, 0)], eval.outputs()[(0, 0)] / 0.25, max_relative = 1e-15);
    }

    #[test]
    fn batchnorm_train_standardizes_pre_activations() {
        // With gamma = 1, beta = 0 the batch-normalized pre-activations have
        // column mean 0 and variance ~1, whatever the incoming scale.
        let spec = LayerSpec {
            input_dim: 4,
            hidden_dims: vec![8],
            output_dim: 1,
            activation: Activation::Identity,
            use_batchnorm: true,
            keep_prob: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let net = Network::init(spec.clone(), &mut rng).unwrap();
        let x = Mat::from_fn(64, 4, |_, _| rng.random_range(-1.0..1.0) * 50.0 + 10.0);
        let masks = sample_dropout_masks(&spec, &mut rng);
        let cache = net.forward(&x, Mode::Train(&masks)).unwrap();
        let u = &cache.pre_activations[0];
        let means = column_means(u);
        let vars = column_vars(u, &means);
        for j in 0..8 {
            assert!(means[j].abs() < 1e-12, "column {j} mean {}", means[j]);
            assert_relative_eq!(vars[j], 1.0, max_relative = 1e-3);
        }
    }

    #[test]
    fn running_stats_move_toward_batch_stats() {
        let spec = LayerSpec {
            input_dim: 4,
            hidden_dims: vec![4],
            output_dim: 1,
            activation: Activation::Elu { alpha: 1.0 },
            use_batchnorm: true,
            keep_prob: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut net = Network::init(spec.clone(), &mut rng).unwrap();
        let x = batch(&mut rng, 32);
        let masks = sample_dropout_masks(&spec, &mut rng);
        let cache = net.forward(&x, Mode::Train(&masks)).unwrap();
        let batch_mean = cache.bn[0].as_ref().unwrap().mean.clone();
        net.update_running_stats(&cache);
        let bn = net.params.layers[0].batchnorm.as_ref().unwrap();
        for j in 0..4 {
            let expected = 0.99 * 0.0 + 0.01 * batch_mean[j];
            assert_relative_eq!(bn.running_mean[j], expected, max_relative = 1e-12);
        }
        // Eval-mode forward passes leave running statistics untouched.
        let eval_cache = net.forward(&x, Mode::Eval).unwrap();
        let before = net.params.clone();
        net.update_running_stats(&eval_cache);
        assert_eq!(net.params, before);
    }

    #[test]
    fn predictions_are_clamped_at_zero() {
        let spec = LayerSpec {
            input_dim: 2,
            hidden_dims: vec![],
            output_dim: 1,
            activation: Activation::Identity,
            use_batchnorm: false,
            keep_prob: 1.0,
        };
        let mut net = Network::init(spec, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        net.params.layers[0].weights = Mat::from_rows(&[&[1.0, 0.0]]);
        net.params.layers[0].bias = vec![0.0];
        assert_eq!(net.predict(&[-500.0, 3.0]).unwrap(), 0.0);
        assert_eq!(net.predict(&[41.5, 3.0]).unwrap(), 41.5);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let spec = spec(vec![4], false, 1.0);
        let net = Network::init(spec, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let x = Mat::from_rows(&[&[1.0, f64::NAN, 0.0, 0.0]]);
        assert!(matches!(net.forward(&x, Mode::Eval), Err(NnError::NonFinite(_))));
    }

    #[test]
    fn wrong_input_width_is_rejected() {
        let spec = spec(vec![4], false, 1.0);
        let net = Network::init(spec, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
        let x = Mat::zeros(1, 3);
        assert!(matches!(net.forward(&x, Mode::Eval), Err(NnError::InputWidth { expected: 4, got: 3 })));
    }

    #[test]
    fn mse_gradient_of_affine_model_matches_closed_form() {
        // y_hat = w x + b, L = (y_hat - y)^2 averaged over the batch:
        // dL/dw = 2 mean((y_hat - y) x), dL/db = 2 mean(y_hat - y).
        let spec = LayerSpec {
            input_dim: 1,
            hidden_dims: vec![],
            output_dim: 1,
            activation: Activation::Identity,
            use_batchnorm: false,
            keep_prob: 1.0,
        };
        let mut net = Network::init(spec, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        net.params.layers[0].weights = Mat::from_rows(&[&[2.0]]);
        net.params.layers[0].bias = vec![1.0];
        let x = Mat::from_rows(&[&[1.0], &[2.0], &[3.0]]);
        let targets = [2.0, 4.0, 9.0];
        let cache = net.forward(&x, Mode::Eval).unwrap();
        let grads = net.backward(&cache, &targets, Loss::MeanSquared).unwrap();
        // Residuals: 1, 1, -2. dL/dw = 2/3 (1*1 + 1*2 - 2*3) = -2, dL/db = 0.
        assert_relative_eq!(grads.layers[0].weights[(0, 0)], -2.0, max_relative = 1e-14);
        assert_relative_eq!(grads.layers[0].bias[0], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn mae_gradient_uses_residual_signs() {
        let spec = LayerSpec {
            input_dim: 1,
            hidden_dims: vec![],
            output_dim: 1,
            activation: Activation::Identity,
            use_batchnorm: false,
            keep_prob: 1.0,
        };
        let mut net = Network::init(spec, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
        net.params.layers[0].weights = Mat::from_rows(&[&[1.0]]);
        net.params.layers[0].bias = vec![0.0];
        let x = Mat::from_rows(&[&[1.0], &[2.0], &[5.0]]);
        // Outputs 1, 2, 5; residual signs +, -, and exactly zero.
        let targets = [0.0, 3.0, 5.0];
        let cache = net.forward(&x, Mode::Eval).unwrap();
        let grads = net.backward(&cache, &targets, Loss::MeanAbsolute).unwrap();
        // dL/db = mean(sign(residual)) = (1 - 1 + 0) / 3 = 0.
        assert_relative_eq!(grads.layers[0].bias[0], 0.0, epsilon = 1e-15);
        // dL/dw = (1*1 - 1*2 + 0*5) / 3.
        assert_relative_eq!(grads.layers[0].weights[(0, 0)], -1.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn backward_rejects_mismatched_targets() {
        let spec = spec(vec![4], false, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let net = Network::init(spec, &mut rng).unwrap();
        let x = batch(&mut rng, 4);
        let cache = net.forward(&x, Mode::Eval).unwrap();
        assert!(net.backward(&cache, &[1.0, 2.0], Loss::MeanAbsolute).is_err());
    }
}
