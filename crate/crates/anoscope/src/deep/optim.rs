use crate::deep::mlp::{Mlp, ParameterGrads};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    Sgd,
    AdaptiveMoments,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub weight_decay: f64,
}

impl Optimizer {
    pub fn sgd(learning_rate: f64, batch_size: usize, epochs: usize, weight_decay: f64) -> Self {
        Optimizer {
            kind: OptimizerKind::Sgd,
            learning_rate,
            batch_size,
            epochs,
            weight_decay,
        }
    }

    pub fn adam(learning_rate: f64, batch_size: usize, epochs: usize, weight_decay: f64) -> Self {
        Optimizer {
            kind: OptimizerKind::AdaptiveMoments,
            learning_rate,
            batch_size,
            epochs,
            weight_decay,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be >= 1".into()));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::InvalidConfig("weight decay must be >= 0".into()));
        }
        Ok(())
    }
}

/// Minibatch gradient accumulator, parallel to the network layers.
pub struct GradAccum {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<Option<DVector<f64>>>,
}

impl GradAccum {
    pub fn zeros(net: &Mlp) -> Self {
        GradAccum {
            weights: net
                .layers
                .iter()
                .map(|l| DMatrix::zeros(l.weight.nrows(), l.weight.ncols()))
                .collect(),
            biases: net
                .layers
                .iter()
                .map(|l| l.bias.as_ref().map(|b| DVector::zeros(b.len())))
                .collect(),
        }
    }

    pub fn add(&mut self, grads: &ParameterGrads) {
        for (acc, g) in self.weights.iter_mut().zip(&grads.weights) {
            *acc += g;
        }
        for (acc, g) in self.biases.iter_mut().zip(&grads.biases) {
            if let (Some(a), Some(g)) = (acc.as_mut(), g.as_ref()) {
                *a += g;
            }
        }
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// First/second moment buffers for AdaptiveMoments; unused for plain SGD.
pub struct OptState {
    m_w: Vec<DMatrix<f64>>,
    v_w: Vec<DMatrix<f64>>,
    m_b: Vec<Option<DVector<f64>>>,
    v_b: Vec<Option<DVector<f64>>>,
    t: u64,
}

impl OptState {
    pub fn new(net: &Mlp) -> Self {
        let zero_w = |n: &Mlp| -> Vec<DMatrix<f64>> {
            n.layers
                .iter()
                .map(|l| DMatrix::zeros(l.weight.nrows(), l.weight.ncols()))
                .collect()
        };
        let zero_b = |n: &Mlp| -> Vec<Option<DVector<f64>>> {
            n.layers
                .iter()
                .map(|l| l.bias.as_ref().map(|b| DVector::zeros(b.len())))
                .collect()
        };
        OptState {
            m_w: zero_w(net),
            v_w: zero_w(net),
            m_b: zero_b(net),
            v_b: zero_b(net),
            t: 0,
        }
    }

    /// One update from already batch-averaged gradients. L2 weight decay is
    /// added to weight gradients only, never biases.
    pub fn step(&mut self, net: &mut Mlp, grads: &GradAccum, opt: &Optimizer) {
        self.t += 1;
        let lr = opt.learning_rate;
        for (l, layer) in net.layers.iter_mut().enumerate() {
            let gw = &grads.weights[l] + &layer.weight * opt.weight_decay;
            match opt.kind {
                OptimizerKind::Sgd => {
                    layer.weight -= gw * lr;
                    if let (Some(b), Some(gb)) = (layer.bias.as_mut(), grads.biases[l].as_ref()) {
                        *b -= gb * lr;
                    }
                }
                OptimizerKind::AdaptiveMoments => {
                    let bc1 = 1.0 - BETA1.powi(self.t as i32);
                    let bc2 = 1.0 - BETA2.powi(self.t as i32);
                    self.m_w[l] = &self.m_w[l] * BETA1 + &gw * (1.0 - BETA1);
                    self.v_w[l] =
                        &self.v_w[l] * BETA2 + gw.component_mul(&gw) * (1.0 - BETA2);
                    for i in 0..layer.weight.nrows() {
                        for j in 0..layer.weight.ncols() {
                            let m_hat = self.m_w[l][(i, j)] / bc1;
                            let v_hat = self.v_w[l][(i, j)] / bc2;
                            layer.weight[(i, j)] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                        }
                    }
                    if let (Some(b), Some(gb)) = (layer.bias.as_mut(), grads.biases[l].as_ref()) {
                        let (mb, vb) = (
                            self.m_b[l].as_mut().unwrap(),
                            self.v_b[l].as_mut().unwrap(),
                        );
                        *mb = &*mb * BETA1 + gb * (1.0 - BETA1);
                        *vb = &*vb * BETA2 + gb.component_mul(gb) * (1.0 - BETA2);
                        for i in 0..b.len() {
                            let m_hat = mb[i] / bc1;
                            let v_hat = vb[i] / bc2;
                            b[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                        }
                    }
                }
            }
        }
    }
}
