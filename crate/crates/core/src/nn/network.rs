use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::{Activation, LayerSpec};
use crate::{Error, Result};

/// One fully connected layer; `weights` is `fan_in x fan_out`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.ncols()
    }

    fn pre_activation(&self, input: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut z = input.dot(&self.weights);
        z += &self.biases;
        z
    }

    fn activate(&self, input: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut z = self.pre_activation(input);
        let act = self.activation;
        z.mapv_inplace(|v| act.apply(v));
        z
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    layers: Vec<Dense>,
}

/// Gradients with the same layout as the network parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.weights.len() * 2);
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        out
    }

    fn flat(&self) -> Vec<f64> {
        self.slices().concat()
    }
}

/// Intermediate values of a training-mode forward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    /// `inputs[l]` is what layer `l` consumed (after the previous layer's dropout).
    inputs: Vec<Array2<f64>>,
    /// Activation outputs before dropout.
    outputs: Vec<Array2<f64>>,
    /// Inverted-dropout multipliers, hidden layers only.
    masks: Vec<Option<Array2<f64>>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Array2<f64> {
        self.outputs.last().expect("network has at least one layer")
    }
}

impl Network {
    /// Seeded initialization: He-uniform for ReLU layers, Xavier-uniform
    /// otherwise, zero biases.
    pub fn new<R: Rng + ?Sized>(input_dim: usize, specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("input dimension must be positive"));
        }
        if specs.is_empty() {
            return Err(Error::invalid("network needs at least one layer"));
        }
        let mut layers = Vec::with_capacity(specs.len());
        let mut fan_in = input_dim;
        for spec in specs {
            if spec.units == 0 {
                return Err(Error::invalid("layer units must be at least 1"));
            }
            let limit = match spec.activation {
                Activation::Relu => (6.0 / fan_in as f64).sqrt(),
                _ => (6.0 / (fan_in + spec.units) as f64).sqrt(),
            };
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
            let weights = Array2::from_shape_simple_fn((fan_in, spec.units), || dist.sample(rng));
            layers.push(Dense {
                weights,
                biases: Array1::zeros(spec.units),
                activation: spec.activation,
            });
            fan_in = spec.units;
        }
        Ok(Self { layers })
    }

    /// Builds a network from explicit layers, checking the dimension chain
    /// and that every parameter is finite.
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network needs at least one layer"));
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.fan_out() == 0 || layer.fan_in() == 0 {
                return Err(Error::shape(format!("layer {k} has an empty weight matrix")));
            }
            if layer.biases.len() != layer.fan_out() {
                return Err(Error::shape(format!(
                    "layer {k}: {} biases for {} units",
                    layer.biases.len(),
                    layer.fan_out()
                )));
            }
            if k > 0 && layers[k - 1].fan_out() != layer.fan_in() {
                return Err(Error::shape(format!(
                    "layer {} outputs {} values but layer {k} expects {}",
                    k - 1,
                    layers[k - 1].fan_out(),
                    layer.fan_in()
                )));
            }
            if !layer.weights.iter().chain(layer.biases.iter()).all(|v| v.is_finite()) {
                return Err(Error::invalid(format!("layer {k} has non-finite parameters")));
            }
        }
        let layers = layers
            .into_iter()
            .map(|l| Dense {
                weights: l.weights.as_standard_layout().into_owned(),
                biases: l.biases,
                activation: l.activation,
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").fan_out()
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers
            .iter()
            .map(|l| LayerSpec {
                units: l.fan_out(),
                activation: l.activation,
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Inference pass; dropout is never applied here.
    pub fn forward(&self, input: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if input.ncols() != self.input_dim() {
            return Err(Error::shape(format!(
                "input has {} columns, network expects {}",
                input.ncols(),
                self.input_dim()
            )));
        }
        Ok(self.forward_unchecked(input))
    }

    pub(crate) fn forward_unchecked(&self, input: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut a = self.layers[0].activate(input);
        for layer in &self.layers[1..] {
            a = layer.activate(a.view());
        }
        a
    }

    /// Training-mode forward pass with inverted dropout after every hidden
    /// activation.
    pub fn forward_train<R: Rng + ?Sized>(
        &self,
        input: ArrayView2<'_, f64>,
        dropout_p: f64,
        rng: &mut R,
    ) -> ForwardTrace {
        let n_layers = self.layers.len();
        let mut inputs = Vec::with_capacity(n_layers);
        let mut outputs = Vec::with_capacity(n_layers);
        let mut masks = Vec::with_capacity(n_layers);
        let mut current = input.to_owned();
        for (k, layer) in self.layers.iter().enumerate() {
            let out = layer.activate(current.view());
            let hidden = k + 1 < n_layers;
            let (next, mask) = if hidden && dropout_p > 0.0 {
                let keep = 1.0 / (1.0 - dropout_p);
                let mask = Array2::from_shape_simple_fn(out.raw_dim(), || {
                    if rng.random::<f64>() < dropout_p {
                        0.0
                    } else {
                        keep
                    }
                });
                (&out * &mask, Some(mask))
            } else {
                (out.clone(), None)
            };
            inputs.push(std::mem::replace(&mut current, next));
            outputs.push(out);
            masks.push(mask);
        }
        ForwardTrace {
            inputs,
            outputs,
            masks,
        }
    }

    /// Backpropagates `d_output` (gradient of the loss w.r.t. the network
    /// output) through a recorded trace.
    pub fn backward(&self, trace: &ForwardTrace, d_output: &Array2<f64>) -> Gradients {
        let n = self.layers.len();
        let mut weights = vec![Array2::zeros((0, 0)); n];
        let mut biases = vec![Array1::zeros(0); n];
        let mut delta = d_output.clone();
        for k in (0..n).rev() {
            let layer = &self.layers[k];
            if let Some(mask) = &trace.masks[k] {
                delta *= mask;
            }
            let act = layer.activation;
            Zip::from(&mut delta)
                .and(&trace.outputs[k])
                .for_each(|d, &a| *d *= act.derivative_from_output(a));
            let g = trace.inputs[k].t().dot(&delta);
            // The product of a transposed view may come back column-major.
            weights[k] = if g.is_standard_layout() {
                g
            } else {
                g.as_standard_layout().into_owned()
            };
            biases[k] = delta.sum_axis(Axis(0));
            if k > 0 {
                delta = delta.dot(&layer.weights.t());
            }
        }
        Gradients { weights, biases }
    }

    /// Mutable parameter slices in the same order as [`Gradients::slices`].
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for layer in &mut self.layers {
            out.push(layer.weights.as_slice_mut().expect("standard layout"));
            out.push(layer.biases.as_slice_mut().expect("standard layout"));
        }
        out
    }

    fn param_mut(&mut self, mut index: usize) -> &mut f64 {
        for slice in self.param_slices_mut() {
            if index < slice.len() {
                return &mut slice[index];
            }
            index -= slice.len();
        }
        panic!("parameter index out of range")
    }

    /// Copy with every ReLU replaced by a sigmoid, for finite-difference checks.
    pub fn smooth_clone(&self) -> Self {
        let mut net = self.clone();
        for layer in &mut net.layers {
            if layer.activation == Activation::Relu {
                layer.activation = Activation::Sigmoid;
            }
        }
        net
    }

    fn check_objective(&self, input: &[f64; 2]) -> f64 {
        let x = ndarray::arr2(&[*input]);
        let out = self.forward_unchecked(x.view());
        0.5 * out.iter().map(|v| v * v).sum::<f64>()
    }

    /// Analytic gradient of the check objective `0.5 * |forward(x)|^2`.
    pub fn check_gradients(&self, input: &[f64; 2]) -> Gradients {
        let x = ndarray::arr2(&[*input]);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let trace = self.forward_train(x.view(), 0.0, &mut rng);
        let d_out = trace.output().clone();
        self.backward(&trace, &d_out)
    }
}

/// Max over parameters of `|analytic - central_difference| / max(1, |analytic|)`
/// for the objective `0.5 * |forward(x)|^2`.
pub fn compare_gradients(net: &Network, input: &[f64; 2], epsilon: f64, analytic: &Gradients) -> f64 {
    let analytic = analytic.flat();
    assert_eq!(analytic.len(), net.param_count(), "gradient layout mismatch");
    let mut probe = net.clone();
    let mut worst = 0.0_f64;
    for (i, &g) in analytic.iter().enumerate() {
        let original = *probe.param_mut(i);
        *probe.param_mut(i) = original + epsilon;
        let plus = probe.check_objective(input);
        *probe.param_mut(i) = original - epsilon;
        let minus = probe.check_objective(input);
        *probe.param_mut(i) = original;
        let numeric = (plus - minus) / (2.0 * epsilon);
        worst = worst.max((g - numeric).abs() / g.abs().max(1.0));
    }
    worst
}

/// Finite-difference validation of backpropagation on a smooth clone of `net`.
pub fn gradient_check(net: &Network, input: &[f64; 2], epsilon: f64) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::invalid(format!(
            "epsilon must lie in [1e-7, 1e-3], got {epsilon}"
        )));
    }
    if net.input_dim() != 2 {
        return Err(Error::shape(format!(
            "gradient check expects a 2-input network, got {}",
            net.input_dim()
        )));
    }
    let smooth = net.smooth_clone();
    let analytic = smooth.check_gradients(input);
    Ok(compare_gradients(&smooth, input, epsilon, &analytic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_net(seed: u64, hidden: &[usize], out: usize, act: Activation) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut specs: Vec<LayerSpec> = hidden
            .iter()
            .map(|&u| LayerSpec {
                units: u,
                activation: act,
            })
            .collect();
        specs.push(LayerSpec::sigmoid(out));
        Network::new(2, &specs, &mut rng).unwrap()
    }

    #[test]
    fn zero_network_outputs_half() {
        let layers = vec![
            Dense {
                weights: Array2::zeros((2, 4)),
                biases: Array1::zeros(4),
                activation: Activation::Relu,
            },
            Dense {
                weights: Array2::zeros((4, 3)),
                biases: Array1::zeros(3),
                activation: Activation::Sigmoid,
            },
        ];
        let net = Network::from_layers(layers).unwrap();
        let out = net.forward(arr2(&[[0.3, -2.0], [5.0, 1.0]]).view()).unwrap();
        assert!(out.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn relu_clips_negative_inputs() {
        let net = Network::from_layers(vec![Dense {
            weights: arr2(&[[1.0, 0.0], [0.0, 1.0]]),
            biases: arr1(&[0.0, 0.0]),
            activation: Activation::Relu,
        }])
        .unwrap();
        let out = net.forward(arr2(&[[1.0, -1.0]]).view()).unwrap();
        assert_eq!(out, arr2(&[[1.0, 0.0]]));
    }

    #[test]
    fn random_batch_shape_and_range() {
        let net = random_net(3, &[8, 8], 5, Activation::Relu);
        let out = net
            .forward(arr2(&[[0.0, 0.0], [0.5, 0.1], [10.0, -3.0]]).view())
            .unwrap();
        assert_eq!(out.dim(), (3, 5));
        assert!(out.iter().all(|v| v.is_finite() && *v > 0.0 && *v < 1.0));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let net = random_net(3, &[4], 2, Activation::Relu);
        let err = net.forward(Array2::zeros((2, 3)).view()).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn from_layers_rejects_broken_chain() {
        let layers = vec![
            Dense {
                weights: Array2::zeros((2, 4)),
                biases: Array1::zeros(4),
                activation: Activation::Relu,
            },
            Dense {
                weights: Array2::zeros((5, 3)),
                biases: Array1::zeros(3),
                activation: Activation::Sigmoid,
            },
        ];
        assert!(matches!(Network::from_layers(layers), Err(Error::Shape(_))));
    }

    #[test]
    fn from_layers_rejects_non_finite() {
        let mut w = Array2::zeros((2, 1));
        w[(0, 0)] = f64::NAN;
        let layers = vec![Dense {
            weights: w,
            biases: Array1::zeros(1),
            activation: Activation::Sigmoid,
        }];
        assert!(Network::from_layers(layers).is_err());
    }

    #[test]
    fn smooth_two_layer_gradient_check() {
        let net = random_net(11, &[6], 3, Activation::Sigmoid);
        let err = gradient_check(&net, &[0.3, 0.7], 1e-5).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn linear_net_gradient_check_is_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let specs = [
            LayerSpec {
                units: 5,
                activation: Activation::Identity,
            },
            LayerSpec {
                units: 3,
                activation: Activation::Identity,
            },
        ];
        let net = Network::new(2, &specs, &mut rng).unwrap();
        let err = gradient_check(&net, &[0.4, -0.2], 1e-5).unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let specs = [
            LayerSpec {
                units: 6,
                activation: Activation::Sigmoid,
            },
            LayerSpec {
                units: 3,
                activation: Activation::Identity,
            },
        ];
        let net = Network::new(2, &specs, &mut rng).unwrap();
        let input = [2.0, -1.5];
        let mut grads = net.check_gradients(&input);
        assert!(compare_gradients(&net, &input, 1e-5, &grads) < 1e-6);
        let (layer, idx) = (0..grads.weights.len())
            .flat_map(|l| grads.weights[l].indexed_iter().map(move |(i, g)| (l, i, *g)))
            .max_by(|a, b| a.2.abs().total_cmp(&b.2.abs()))
            .map(|(l, i, _)| (l, i))
            .unwrap();
        assert!(grads.weights[layer][idx].abs() > 0.2);
        grads.weights[layer][idx] *= 2.0;
        let err = compare_gradients(&net, &input, 1e-5, &grads);
        assert!(err > 0.1, "{err}");
    }

    #[test]
    fn gradient_check_rejects_bad_epsilon() {
        let net = random_net(1, &[3], 2, Activation::Relu);
        assert!(gradient_check(&net, &[0.0, 0.0], 1e-2).is_err());
        assert!(gradient_check(&net, &[0.0, 0.0], 1e-9).is_err());
    }

    #[test]
    fn dropout_zero_matches_inference() {
        let net = random_net(4, &[7, 7], 3, Activation::Relu);
        let x = arr2(&[[0.2, 0.9], [0.5, 0.5]]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace = net.forward_train(x.view(), 0.0, &mut rng);
        assert_eq!(trace.output(), &net.forward(x.view()).unwrap());
    }

    #[test]
    fn dropout_masks_are_inverted() {
        let net = random_net(4, &[200], 2, Activation::Relu);
        let x = arr2(&[[0.2, 0.9]]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trace = net.forward_train(x.view(), 0.25, &mut rng);
        let mask = trace.masks[0].as_ref().unwrap();
        assert!(mask.iter().all(|&m| m == 0.0 || (m - 1.0 / 0.75).abs() < 1e-15));
        assert!(trace.masks[1].is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn backprop_matches_finite_differences(
            seed in any::<u64>(),
            h1 in 1usize..6,
            h2 in 1usize..6,
            out in 1usize..4,
            x in -1.0f64..1.0,
            y in -1.0f64..1.0,
        ) {
            let net = random_net(seed, &[h1, h2], out, Activation::Relu);
            let err = gradient_check(&net, &[x, y], 1e-5).unwrap();
            prop_assert!(err < 1e-4, "relative error {}", err);
        }
    }
}
