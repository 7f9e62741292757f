//! Dense feed-forward networks: forward pass, backpropagation, Adam,
//! inverted dropout and early stopping.
//!
//! Weights are stored `fan_in x fan_out`, so a batch `X` (rows = samples)
//! goes through a layer as `act(X W + b)`.

mod adam;
mod network;
mod shape;
mod train;

pub use adam::{Adam, AdamParams};
pub use network::{compare_gradients, gradient_check, Dense, ForwardTrace, Gradients, Network};
pub use shape::{expand_shape, NetworkShape, ShapeKind, NEURON_LADDER};
pub use train::{train, EpochStats, TrainConfig, TrainReport};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            // Written so NaN propagates; `f64::max` would swallow it.
            Activation::Relu => {
                if z < 0.0 {
                    0.0
                } else {
                    z
                }
            }
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output `a = act(z)`.
    #[inline]
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub units: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn relu(units: usize) -> Self {
        Self {
            units,
            activation: Activation::Relu,
        }
    }

    pub fn sigmoid(units: usize) -> Self {
        Self {
            units,
            activation: Activation::Sigmoid,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(800.0) <= 1.0);
        assert!(sigmoid(-800.0).is_finite() && sigmoid(800.0).is_finite());
    }

    #[test]
    fn relu_derivative_uses_output_sign() {
        assert_eq!(Activation::Relu.derivative_from_output(0.0), 0.0);
        assert_eq!(Activation::Relu.derivative_from_output(2.0), 1.0);
        assert_eq!(Activation::Sigmoid.derivative_from_output(0.5), 0.25);
    }
}
