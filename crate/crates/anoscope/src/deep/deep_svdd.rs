//! Deep SVDD: one-class, soft-boundary, and semi-supervised (SAD) variants.

use crate::dataset::{Dataset, Label};
use crate::deep::mlp::{embedding_variance, Mlp, MlpSpec};
use crate::deep::optim::{GradAccum, OptState, Optimizer};
use crate::error::{Error, Result};
use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Collapse guard threshold, as a fraction of the initial embedding variance.
const COLLAPSE_RATIO: f64 = 1e-6;
/// Distance floor for the inverse-distance SAD anomaly term.
const SAD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DeepSvddVariant {
    OneClass,
    /// nu in (0, 1]; r2 is refreshed each epoch as the (1 - nu)-quantile of
    /// embedded training distances.
    SoftBoundary { nu: f64, r2: f64 },
    /// eta > 0 weights the labeled loss terms.
    Sad { eta: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeepSvddModel {
    pub network: Mlp,
    pub center: DVector<f64>,
    pub variant: DeepSvddVariant,
    pub objective_trace: Vec<f64>,
    /// Mean score of labeled anomalies after each epoch (SAD only).
    pub labeled_anomaly_trace: Vec<f64>,
}

struct TrainPoint {
    x: DVector<f64>,
    // +1 labeled normal, -1 labeled anomaly, 0 unlabeled
    y: i8,
}

/// Trains the embedding network against a frozen center c set to the mean
/// initial embedding. Bias terms are rejected outright; a drop of the
/// embedding variance below 1e-6 of its initial value aborts the fit.
pub fn fit_deep_svdd(
    train: &Dataset,
    spec: &MlpSpec,
    opt: &Optimizer,
    variant: DeepSvddVariant,
    labeled: Option<&Dataset>,
) -> Result<DeepSvddModel> {
    opt.validate()?;
    if spec.use_bias {
        return Err(Error::BiasTermsForbidden);
    }
    if spec.layer_dims[0] != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            got: spec.layer_dims[0],
        });
    }
    match variant {
        DeepSvddVariant::SoftBoundary { nu, .. } if !(0.0 < nu && nu <= 1.0) => {
            return Err(Error::InvalidNu(nu));
        }
        DeepSvddVariant::Sad { eta } if eta <= 0.0 => {
            return Err(Error::InvalidConfig(format!("SAD weight {eta} must be positive")));
        }
        DeepSvddVariant::Sad { .. } => {
            let has_labels = labeled
                .map(|d| d.labels().iter().any(|&l| l != Label::Unlabeled))
                .unwrap_or(false);
            if !has_labels {
                return Err(Error::InvalidConfig(
                    "SAD variant requires labeled points".into(),
                ));
            }
        }
        _ => {}
    }

    let mut net = Mlp::init(spec);
    // frozen center: mean of the initial embeddings
    let mut center = DVector::zeros(net.output_dim());
    for x in train.iter_rows() {
        center += net.output(&x)?;
    }
    center /= train.n() as f64;
    // an exactly-zero center admits the trivial all-zero network; nudge it
    if center.norm() < 1e-9 {
        center.fill(0.1);
    }
    let initial_variance = embedding_variance(&net, train)?.max(f64::MIN_POSITIVE);

    let mut points: Vec<TrainPoint> = train
        .iter_rows()
        .map(|x| TrainPoint { x, y: 0 })
        .collect();
    if !matches!(variant, DeepSvddVariant::Sad { .. }) && labeled.is_some() {
        return Err(Error::InvalidConfig(
            "labeled data is only consumed by the SAD variant".into(),
        ));
    }
    if let Some(lab) = labeled {
        if lab.dim() != train.dim() {
            return Err(Error::DimensionMismatch {
                expected: train.dim(),
                got: lab.dim(),
            });
        }
        for i in 0..lab.n() {
            let y = match lab.labels()[i] {
                Label::Normal => 1,
                Label::Anomaly => -1,
                Label::Unlabeled => 0,
            };
            points.push(TrainPoint { x: lab.row(i), y });
        }
    }

    let mut variant = variant;
    let mut state = OptState::new(&net);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(2));
    let mut order: Vec<usize> = (0..points.len()).collect();
    let mut objective_trace = Vec::with_capacity(opt.epochs);
    let mut labeled_anomaly_trace = Vec::new();
    for epoch in 0..opt.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(opt.batch_size) {
            let mut acc = GradAccum::zeros(&net);
            let inv_batch = 1.0 / batch.len() as f64;
            for &i in batch {
                let p = &points[i];
                let (phi, tape) = net.forward(&p.x)?;
                let diff = &phi - &center;
                let d2 = diff.norm_squared();
                let grad_out = match (&variant, p.y) {
                    (DeepSvddVariant::OneClass, _) => diff * (2.0 * inv_batch),
                    (DeepSvddVariant::SoftBoundary { nu, r2 }, _) => {
                        if d2 > *r2 {
                            diff * (2.0 * inv_batch / nu)
                        } else {
                            DVector::zeros(phi.len())
                        }
                    }
                    (DeepSvddVariant::Sad { eta }, -1) => {
                        // d/dphi (d^2)^-1 = -2 diff / d^4, distance floored
                        let d2f = d2.max(SAD_FLOOR);
                        diff * (-2.0 * eta * inv_batch / (d2f * d2f))
                    }
                    (DeepSvddVariant::Sad { eta }, 1) => diff * (2.0 * eta * inv_batch),
                    (DeepSvddVariant::Sad { .. }, _) => diff * (2.0 * inv_batch),
                };
                acc.add(&net.backward(&tape, &grad_out));
            }
            state.step(&mut net, &acc, opt);
        }

        // epoch bookkeeping: R update, objective, collapse guard
        let dists: Result<Vec<f64>> = points
            .iter()
            .map(|p| Ok((net.output(&p.x)? - &center).norm_squared()))
            .collect();
        let dists = dists?;
        if let DeepSvddVariant::SoftBoundary { nu, r2 } = &mut variant {
            let mut sorted = dists.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            *r2 = crate::data::quantile_sorted(&sorted, 1.0 - *nu);
        }
        let objective = match &variant {
            DeepSvddVariant::OneClass => dists.iter().sum::<f64>() / dists.len() as f64,
            DeepSvddVariant::SoftBoundary { nu, r2 } => {
                let n = dists.len() as f64;
                r2 + dists.iter().map(|d| (d - r2).max(0.0)).sum::<f64>() / (nu * n)
            }
            DeepSvddVariant::Sad { eta } => {
                let mut total = 0.0;
                for (p, &d2) in points.iter().zip(&dists) {
                    total += match p.y {
                        -1 => eta / d2.max(SAD_FLOOR),
                        1 => eta * d2,
                        _ => d2,
                    };
                }
                total / points.len() as f64
            }
        };
        if !objective.is_finite() {
            return Err(Error::Diverged(epoch));
        }
        objective_trace.push(objective);
        if matches!(variant, DeepSvddVariant::Sad { .. }) {
            let anomaly_scores: Vec<f64> = points
                .iter()
                .zip(&dists)
                .filter(|(p, _)| p.y == -1)
                .map(|(_, &d)| d)
                .collect();
            labeled_anomaly_trace
                .push(anomaly_scores.iter().sum::<f64>() / anomaly_scores.len() as f64);
        }
        let variance = embedding_variance(&net, train)?;
        if variance < COLLAPSE_RATIO * initial_variance {
            return Err(Error::CollapseDetected {
                epoch,
                variance_ratio: variance / initial_variance,
            });
        }
    }

    Ok(DeepSvddModel {
        network: net,
        center,
        variant,
        objective_trace,
        labeled_anomaly_trace,
    })
}

impl DeepSvddModel {
    /// ||phi(x) - c||^2, shifted by -R^2 for the soft-boundary variant.
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        let d2 = match self.network.output(x) {
            Ok(phi) => (phi - &self.center).norm_squared(),
            Err(_) => return f64::INFINITY,
        };
        match self.variant {
            DeepSvddVariant::SoftBoundary { r2, .. } => d2 - r2,
            _ => d2,
        }
    }
}
