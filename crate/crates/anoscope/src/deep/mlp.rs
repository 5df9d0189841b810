//! Minimal feedforward networks with tape-based exact backpropagation.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    /// ELU with alpha = 1.
    Elu,
    Relu,
    Linear,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Elu => {
                if z > 0.0 {
                    z
                } else {
                    z.exp() - 1.0
                }
            }
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Elu => {
                if z > 0.0 {
                    1.0
                } else {
                    z.exp()
                }
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

/// Network topology: `layer_dims` lists the width of every layer including
/// input and output; hidden layers use `activation`, the output layer is
/// linear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_dims: Vec<usize>,
    pub activation: Activation,
    pub use_bias: bool,
    pub seed: u64,
}

impl MlpSpec {
    pub fn new(layer_dims: Vec<usize>, activation: Activation, use_bias: bool, seed: u64) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidConfig(format!("bad layer dims {layer_dims:?}")));
        }
        Ok(MlpSpec {
            layer_dims,
            activation,
            use_bias,
            seed,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layer {
    pub weight: DMatrix<f64>,
    pub bias: Option<DVector<f64>>,
    pub activation: Activation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Per-layer inputs and pre-activations captured during a forward pass.
pub struct Tape {
    inputs: Vec<DVector<f64>>,
    pre_activations: Vec<DVector<f64>>,
}

/// Parameter gradients, parallel to the layer list.
#[derive(Debug, Clone)]
pub struct ParameterGrads {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<Option<DVector<f64>>>,
    /// Gradient with respect to the network input.
    pub input: DVector<f64>,
}

impl Mlp {
    /// Glorot-uniform initialization from the spec seed.
    pub fn init(spec: &MlpSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let n_layers = spec.layer_dims.len() - 1;
        let layers = (0..n_layers)
            .map(|l| {
                let (fan_in, fan_out) = (spec.layer_dims[l], spec.layer_dims[l + 1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weight =
                    DMatrix::from_fn(fan_out, fan_in, |_, _| rng.gen_range(-limit..limit));
                let bias = spec.use_bias.then(|| DVector::zeros(fan_out));
                let activation = if l + 1 == n_layers {
                    Activation::Linear
                } else {
                    spec.activation
                };
                Layer {
                    weight,
                    bias,
                    activation,
                }
            })
            .collect();
        Mlp { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weight.nrows()
    }

    pub fn has_bias(&self) -> bool {
        self.layers.iter().any(|l| l.bias.is_some())
    }

    pub fn forward(&self, x: &DVector<f64>) -> Result<(DVector<f64>, Tape)> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut current = x.clone();
        for layer in &self.layers {
            inputs.push(current.clone());
            let mut z = &layer.weight * &current;
            if let Some(b) = &layer.bias {
                z += b;
            }
            pre_activations.push(z.clone());
            current = z.map(|v| layer.activation.apply(v));
        }
        Ok((
            current,
            Tape {
                inputs,
                pre_activations,
            },
        ))
    }

    pub fn output(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.forward(x)?.0)
    }

    /// Exact gradients of the forward map contracted with `output_grad`.
    pub fn backward(&self, tape: &Tape, output_grad: &DVector<f64>) -> ParameterGrads {
        let mut weights = Vec::with_capacity(self.layers.len());
        let mut biases = Vec::with_capacity(self.layers.len());
        let mut delta = output_grad.clone();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let dz = DVector::from_fn(delta.len(), |i, _| {
                delta[i] * layer.activation.derivative(tape.pre_activations[l][i])
            });
            weights.push(&dz * tape.inputs[l].transpose());
            biases.push(layer.bias.as_ref().map(|_| dz.clone()));
            delta = layer.weight.transpose() * dz;
        }
        weights.reverse();
        biases.reverse();
        ParameterGrads {
            weights,
            biases,
            input: delta,
        }
    }
}

/// Mean per-dimension variance of the network outputs over `data` rows.
pub fn embedding_variance(net: &Mlp, data: &crate::dataset::Dataset) -> Result<f64> {
    let n = data.n();
    let d = net.output_dim();
    let mut outputs = Vec::with_capacity(n);
    for x in data.iter_rows() {
        outputs.push(net.output(&x)?);
    }
    let mut mean = DVector::zeros(d);
    for o in &outputs {
        mean += o;
    }
    mean /= n as f64;
    let var: f64 = outputs
        .iter()
        .map(|o| (o - &mean).norm_squared())
        .sum::<f64>()
        / (n as f64 * d as f64);
    Ok(var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn finite_diff_check(spec: &MlpSpec, seed: u64) {
        let net = Mlp::init(spec);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DVector::from_fn(net.input_dim(), |_, _| rng.gen::<f64>() * 2.0 - 1.0);
        // scalar loss: 1/2 ||y||^2, so output_grad = y
        let (y, tape) = net.forward(&x).unwrap();
        let grads = net.backward(&tape, &y);
        let loss = |n: &Mlp| 0.5 * n.output(&x).unwrap().norm_squared();
        let h = 1e-5;
        for (l, layer) in net.layers.iter().enumerate() {
            for i in 0..layer.weight.nrows() {
                for j in 0..layer.weight.ncols() {
                    let mut plus = net.clone();
                    plus.layers[l].weight[(i, j)] += h;
                    let mut minus = net.clone();
                    minus.layers[l].weight[(i, j)] -= h;
                    let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                    let analytic = grads.weights[l][(i, j)];
                    let denom = numeric.abs().max(analytic.abs()).max(1e-3);
                    assert!(
                        (numeric - analytic).abs() / denom < 1e-5,
                        "layer {l} W[{i},{j}]: {numeric} vs {analytic}"
                    );
                }
            }
            if let Some(bias) = &layer.bias {
                for i in 0..bias.len() {
                    let mut plus = net.clone();
                    if let Some(b) = &mut plus.layers[l].bias {
                        b[i] += h;
                    }
                    let mut minus = net.clone();
                    if let Some(b) = &mut minus.layers[l].bias {
                        b[i] -= h;
                    }
                    let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                    let analytic = grads.biases[l].as_ref().unwrap()[i];
                    let denom = numeric.abs().max(analytic.abs()).max(1e-3);
                    assert!((numeric - analytic).abs() / denom < 1e-5);
                }
            }
        }
        // input gradient too
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let numeric = (0.5 * net.output(&xp).unwrap().norm_squared()
                - 0.5 * net.output(&xm).unwrap().norm_squared())
                / (2.0 * h);
            let analytic = grads.input[i];
            let denom = numeric.abs().max(analytic.abs()).max(1e-3);
            assert!((numeric - analytic).abs() / denom < 1e-5);
        }
    }

    #[test]
    fn single_linear_layer_gradient() {
        let spec = MlpSpec::new(vec![3, 2], Activation::Linear, false, 1).unwrap();
        let net = Mlp::init(&spec);
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let (y, tape) = net.forward(&x).unwrap();
        // forward is Wx
        let expect = &net.layers[0].weight * &x;
        assert_relative_eq!((y - &expect).norm(), 0.0);
        // backward with upstream g: grad_W = g x^T
        let g = DVector::from_vec(vec![0.3, -0.7]);
        let grads = net.backward(&tape, &g);
        let expect_w = &g * x.transpose();
        assert_relative_eq!((grads.weights[0].clone() - expect_w).norm(), 0.0);
    }

    #[test]
    fn elu_two_layer_matches_finite_differences() {
        let spec = MlpSpec::new(vec![4, 6, 3], Activation::Elu, true, 7).unwrap();
        finite_diff_check(&spec, 70);
    }

    #[test]
    fn relu_and_linear_layers_match_finite_differences() {
        // ReLU kinks sit at 0; a random input almost surely avoids them
        let spec = MlpSpec::new(vec![3, 5, 2], Activation::Relu, true, 8).unwrap();
        finite_diff_check(&spec, 80);
        let spec = MlpSpec::new(vec![2, 4, 4, 2], Activation::Linear, false, 9).unwrap();
        finite_diff_check(&spec, 90);
    }

    #[test]
    fn zero_input_no_bias_gives_zero_output() {
        let spec = MlpSpec::new(vec![3, 4, 2], Activation::Relu, false, 2).unwrap();
        let net = Mlp::init(&spec);
        let y = net.output(&DVector::zeros(3)).unwrap();
        assert_relative_eq!(y.norm(), 0.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let spec = MlpSpec::new(vec![3, 2], Activation::Linear, false, 1).unwrap();
        let net = Mlp::init(&spec);
        assert!(matches!(
            net.output(&DVector::zeros(4)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn embedding_variance_of_constant_and_identity() {
        use crate::dataset::{Dataset, Label};
        let ds = Dataset::from_rows(
            &[vec![1.0, 2.0], vec![3.0, 4.0], vec![0.0, -1.0]],
            vec![Label::Unlabeled; 3],
        )
        .unwrap();
        // zero-weight network is constant
        let spec = MlpSpec::new(vec![2, 2], Activation::Linear, false, 1).unwrap();
        let mut net = Mlp::init(&spec);
        net.layers[0].weight.fill(0.0);
        assert_relative_eq!(embedding_variance(&net, &ds).unwrap(), 0.0);
        // identity network reproduces raw feature variance
        net.layers[0].weight = DMatrix::identity(2, 2);
        let raw = embedding_variance(&net, &ds).unwrap();
        let (_, cov) = crate::prob::gaussian_mean_cov(ds.matrix());
        assert_relative_eq!(raw, cov.trace() / 2.0, epsilon = 1e-12);
    }
}
