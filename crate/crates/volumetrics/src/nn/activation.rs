//! Activation functions and their derivatives.

use serde::{Deserialize, Serialize};

/// Exponential linear unit: `x` for `x > 0`, `alpha * (exp(x) - 1)` otherwise.
pub fn elu(x: f64, alpha: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        alpha * (x.exp() - 1.0)
    }
}

/// Derivative of [`elu`]: `1` for `x > 0`, `elu(x, alpha) + alpha` otherwise.
///
/// The one-sided limits at zero are `1` from the right and `alpha` from the
/// left, so the derivative is continuous exactly when `alpha == 1`.
pub fn elu_derivative(x: f64, alpha: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        elu(x, alpha) + alpha
    }
}

/// Logistic sigmoid with steepness `lambda`: `1 / (1 + exp(-lambda * x))`.
///
/// Saturates cleanly to 0 and 1 for large `|x|`; `exp` overflow to infinity
/// yields `1 / inf == 0`, never a NaN.
pub fn sigmoid(x: f64, lambda: f64) -> f64 {
    1.0 / (1.0 + (-lambda * x).exp())
}

/// Derivative of [`sigmoid`]: `lambda * s * (1 - s)` where `s = sigmoid(x)`.
pub fn sigmoid_derivative(x: f64, lambda: f64) -> f64 {
    let s = sigmoid(x, lambda);
    lambda * s * (1.0 - s)
}

/// Elementwise activation applied to a layer's pre-activations.
///
/// Hidden layers use one of these; the output layer is always [`Activation::Identity`]
/// because the network regresses an unbounded volume.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    /// ELU with the given `alpha`.
    Elu { alpha: f64 },
    /// Logistic sigmoid with the given steepness `lambda`.
    Sigmoid { lambda: f64 },
    /// Pass-through.
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Elu { alpha } => elu(x, alpha),
            Activation::Sigmoid { lambda } => sigmoid(x, lambda),
            Activation::Identity => x,
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Elu { alpha } => elu_derivative(x, alpha),
            Activation::Sigmoid { lambda } => sigmoid_derivative(x, lambda),
            Activation::Identity => 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn elu_known_values() {
        assert_eq!(elu(2.0, 1.0), 2.0);
        assert_eq!(elu(0.0, 1.0), 0.0);
        // exp(-1) - 1 = -0.6321205588285577
        assert_relative_eq!(elu(-1.0, 1.0), -0.632_120_558_828_557_7, max_relative = 1e-15);
        assert_relative_eq!(elu(-1.0, 0.5), -0.316_060_279_414_278_84, max_relative = 1e-15);
    }

    #[test]
    fn elu_is_continuous_at_zero() {
        for alpha in [0.25, 1.0, 2.0] {
            let below = elu(-1e-12, alpha);
            let above = elu(1e-12, alpha);
            assert!((below - above).abs() < 1e-11);
        }
    }

    #[test]
    fn elu_derivative_known_values() {
        assert_eq!(elu_derivative(3.0, 1.0), 1.0);
        // At zero the left branch applies: elu(0) + alpha = alpha.
        assert_eq!(elu_derivative(0.0, 1.0), 1.0);
        assert_eq!(elu_derivative(0.0, 0.3), 0.3);
        // For x <= 0 the derivative equals alpha * exp(x).
        assert_relative_eq!(elu_derivative(-2.0, 1.5), 1.5 * (-2.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn elu_derivative_matches_finite_difference() {
        let h = 1e-7;
        for &x in &[-3.0, -0.7, 0.4, 2.2] {
            for &alpha in &[0.5, 1.0] {
                let fd = (elu(x + h, alpha) - elu(x - h, alpha)) / (2.0 * h);
                assert_relative_eq!(elu_derivative(x, alpha), fd, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn sigmoid_known_values() {
        assert_eq!(sigmoid(0.0, 1.0), 0.5);
        assert_relative_eq!(sigmoid(1.0, 1.0), 0.731_058_578_630_004_9, max_relative = 1e-15);
        // Doubling lambda at x = 0.5 matches lambda = 1 at x = 1.
        assert_relative_eq!(sigmoid(0.5, 2.0), sigmoid(1.0, 1.0), max_relative = 1e-15);
    }

    #[test]
    fn sigmoid_saturates_without_overflow() {
        assert_eq!(sigmoid(1e4, 1.0), 1.0);
        assert_eq!(sigmoid(-1e4, 1.0), 0.0);
        assert!(sigmoid(-1e308, 2.0).is_finite());
    }

    #[test]
    fn sigmoid_derivative_peaks_at_origin() {
        assert_relative_eq!(sigmoid_derivative(0.0, 1.0), 0.25, max_relative = 1e-15);
        assert!(sigmoid_derivative(0.0, 1.0) > sigmoid_derivative(1.0, 1.0));
        assert!(sigmoid_derivative(0.0, 1.0) > sigmoid_derivative(-1.0, 1.0));
    }

    #[test]
    fn identity_passes_through() {
        assert_eq!(Activation::Identity.apply(-4.2), -4.2);
        assert_eq!(Activation::Identity.derivative(-4.2), 1.0);
    }
}
