//! Autoencoder detector: squared reconstruction error as anomaly score.

use crate::dataset::Dataset;
use crate::deep::mlp::{Mlp, MlpSpec};
use crate::deep::optim::{GradAccum, OptState, Optimizer};
use crate::error::{Error, Result};
use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AeModel {
    pub encoder: Mlp,
    pub decoder: Mlp,
    pub bottleneck: usize,
    pub train_trace: Vec<f64>,
    pub holdout_trace: Vec<f64>,
    pub best_epoch: usize,
}

fn mse(net: &Mlp, data: &Dataset) -> Result<f64> {
    let mut total = 0.0;
    for x in data.iter_rows() {
        total += (net.output(&x)? - &x).norm_squared();
    }
    Ok(total / data.n() as f64)
}

/// `spec.layer_dims` gives the encoder topology D -> ... -> d; the decoder
/// mirrors it in reverse. Training minimizes mean squared reconstruction
/// error and keeps the weights from the epoch with the lowest holdout error.
pub fn fit_autoencoder(
    train: &Dataset,
    spec: &MlpSpec,
    opt: &Optimizer,
    holdout: &Dataset,
) -> Result<AeModel> {
    opt.validate()?;
    if spec.layer_dims[0] != train.dim() || holdout.dim() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            got: spec.layer_dims[0].max(holdout.dim()),
        });
    }
    let bottleneck = *spec.layer_dims.last().unwrap();
    if bottleneck > train.dim() {
        return Err(Error::InvalidConfig(format!(
            "bottleneck {bottleneck} exceeds input dimension {}",
            train.dim()
        )));
    }
    // train encoder and decoder as one composed network D -> d -> D
    let mut full_dims = spec.layer_dims.clone();
    full_dims.extend(spec.layer_dims.iter().rev().skip(1));
    let full_spec = MlpSpec::new(full_dims, spec.activation, spec.use_bias, spec.seed)?;
    let mut net = Mlp::init(&full_spec);
    // bottleneck layer sits mid-network, so it carries the hidden activation
    let split = spec.layer_dims.len() - 1;

    let mut state = OptState::new(&net);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train.n()).collect();
    let mut train_trace = Vec::with_capacity(opt.epochs);
    let mut holdout_trace = Vec::with_capacity(opt.epochs);
    let mut best: (f64, Mlp, usize) = (mse(&net, holdout)?, net.clone(), 0);
    for epoch in 0..opt.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(opt.batch_size) {
            let mut acc = GradAccum::zeros(&net);
            for &i in batch {
                let x = train.row(i);
                let (y, tape) = net.forward(&x)?;
                let grad_out = (y - &x) * (2.0 / batch.len() as f64);
                acc.add(&net.backward(&tape, &grad_out));
            }
            state.step(&mut net, &acc, opt);
        }
        let train_err = mse(&net, train)?;
        let holdout_err = mse(&net, holdout)?;
        if !train_err.is_finite() || !holdout_err.is_finite() {
            return Err(Error::Diverged(epoch));
        }
        train_trace.push(train_err);
        holdout_trace.push(holdout_err);
        if holdout_err < best.0 {
            best = (holdout_err, net.clone(), epoch + 1);
        }
    }
    let (_, net, best_epoch) = best;
    let encoder = Mlp {
        layers: net.layers[..split].to_vec(),
    };
    let decoder = Mlp {
        layers: net.layers[split..].to_vec(),
    };
    Ok(AeModel {
        encoder,
        decoder,
        bottleneck,
        train_trace,
        holdout_trace,
        best_epoch,
    })
}

impl AeModel {
    pub fn encode(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.encoder.output(x)
    }

    pub fn reconstruct(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.decoder.output(&self.encoder.output(x)?)
    }

    /// Squared reconstruction error ||x - dec(enc(x))||^2.
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        self.reconstruct(x)
            .map(|r| (x - r).norm_squared())
            .unwrap_or(f64::INFINITY)
    }
}
