//! Adam parameter updates with bias-corrected moment estimates.

use super::params::{Gradients, NetworkParams};
use super::NnError;
use serde::{Deserialize, Serialize};

/// Adam hyperparameters. The defaults are the widely used settings
/// (step size 0.001, decay rates 0.9 and 0.999, epsilon 1e-8).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamHyper {
    pub fn validate(&self) -> Result<(), NnError> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(NnError::InvalidSpec(format!("invalid Adam hyperparameters: {self:?}")))
        }
    }
}

/// Optimizer state: first and second moment estimates for every learnable
/// parameter, plus the step counter driving bias correction.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub hyper: AdamHyper,
    m: Gradients,
    v: Gradients,
    t: u64,
}

fn adam_update(
    hyper: &AdamHyper,
    bc1: f64,
    bc2: f64,
    params: &mut [f64],
    m: &mut [f64],
    v: &mut [f64],
    grads: &[f64],
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
        v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= hyper.learning_rate * m_hat / (v_hat.sqrt() + hyper.epsilon);
    }
}

impl AdamState {
    /// Fresh state (zero moments, step counter zero) shaped like `params`.
    pub fn new(params: &NetworkParams, hyper: AdamHyper) -> Result<Self, NnError> {
        hyper.validate()?;
        Ok(AdamState {
            hyper,
            m: Gradients::zeros_like(params),
            v: Gradients::zeros_like(params),
            t: 0,
        })
    }

    /// Steps taken so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// Applies one Adam update in place:
    ///
    /// ```text
    /// m <- b1 m + (1 - b1) g        v <- b2 v + (1 - b2) g^2
    /// p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
    /// ```
    ///
    /// A non-finite or mis-shaped gradient aborts the step before any
    /// parameter or moment is touched, so the optimizer state stays usable.
    pub fn step(&mut self, params: &mut NetworkParams, grads: &Gradients) -> Result<(), NnError> {
        if grads.layers.len() != params.layers.len() {
            return Err(NnError::LengthMismatch {
                context: "gradient layers",
                expected: params.layers.len(),
                got: grads.layers.len(),
            });
        }
        for (layer, g) in params.layers.iter().zip(&grads.layers) {
            let shapes_match = g.weights.rows() == layer.weights.rows()
                && g.weights.cols() == layer.weights.cols()
                && g.bias.len() == layer.bias.len()
                && g.gamma.is_some() == layer.batchnorm.is_some();
            if !shapes_match {
                return Err(NnError::LengthMismatch {
                    context: "gradient layer shape",
                    expected: layer.weights.data().len(),
                    got: g.weights.data().len(),
                });
            }
        }
        if !grads.is_finite() {
            return Err(NnError::NonFinite("gradients passed to Adam"));
        }

        self.t += 1;
        let bc1 = 1.0 - self.hyper.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.hyper.beta2.powi(self.t as i32);
        for l in 0..params.layers.len() {
            let layer = &mut params.layers[l];
            let g = &grads.layers[l];
            let m = &mut self.m.layers[l];
            let v = &mut self.v.layers[l];
            adam_update(
                &self.hyper,
                bc1,
                bc2,
                layer.weights.data_mut(),
                m.weights.data_mut(),
                v.weights.data_mut(),
                g.weights.data(),
            );
            adam_update(&self.hyper, bc1, bc2, &mut layer.bias, &mut m.bias, &mut v.bias, &g.bias);
            if let (Some(bn), Some(gg), Some(gb)) = (layer.batchnorm.as_mut(), &g.gamma, &g.beta) {
                let (mg, mb) = (m.gamma.as_mut().unwrap(), m.beta.as_mut().unwrap());
                let (vg, vb) = (v.gamma.as_mut().unwrap(), v.beta.as_mut().unwrap());
                adam_update(&self.hyper, bc1, bc2, &mut bn.gamma, mg, vg, gg);
                adam_update(&self.hyper, bc1, bc2, &mut bn.beta, mb, vb, gb);
            }
        }
        Ok(())
    }
}
