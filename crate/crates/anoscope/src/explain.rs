//! Neuralized KDE and Taylor-type relevance heatmaps for kernel density
//! scores, plus explanation-accuracy helpers.

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::prob::KdeModel;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Two-layer rewrite of the KDE score: per-training-point distance units
/// h_j(x) = gamma * dist^2(x, x_j) + log n followed by soft min-pooling
/// smin_j h_j = -log sum_j exp(-h_j), which equals the negative
/// log-likelihood exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeuralizedKde {
    model: KdeModel,
}

pub fn neuralize_kde(model: &KdeModel) -> NeuralizedKde {
    NeuralizedKde {
        model: model.clone(),
    }
}

impl NeuralizedKde {
    /// First layer: h_j(x) = gamma * dist^2(x, x_j) + log n.
    pub fn distance_layer(&self, x: &DVector<f64>) -> Vec<f64> {
        let gamma = self.model.gamma();
        let log_n = (self.model.training.n() as f64).ln();
        self.model
            .training
            .iter_rows()
            .map(|xj| gamma * self.model.kernel.sq_dist(x, &xj) + log_n)
            .collect()
    }

    /// Second layer: soft min-pooling of the distance units.
    pub fn soft_min(h: &[f64]) -> f64 {
        let m = h.iter().cloned().fold(f64::INFINITY, f64::min);
        -(h.iter().map(|v| -(v - m)).map(f64::exp).sum::<f64>().ln()) + m
    }

    /// Composed two-layer evaluation; equals `KdeModel::score` to 1e-12.
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        Self::soft_min(&self.distance_layer(x))
    }
}

/// Which argument of the kernel the relevance gradient is taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientTarget {
    /// Gradient with respect to each training point (default reading).
    TrainingPoints,
    /// Gradient with respect to the probe, decomposed per training point.
    Probe,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Heatmap {
    pub relevance: DVector<f64>,
    pub score: f64,
}

/// Taylor-type relevance R = 1/2 sum_j (x_j - x) ⊙ grad_{x_j} s(x) with the
/// analytic kernel gradient. For the RBF kernel this closed form is
/// R = (gamma / (n f(x))) sum_j (x_j - x) ⊙ (x_j - x) exp(-gamma ||x-x_j||^2),
/// so every component is non-negative.
pub fn lrp_heatmap(model: &KdeModel, x: &DVector<f64>) -> Heatmap {
    lrp_heatmap_with(model, x, GradientTarget::TrainingPoints)
}

pub fn lrp_heatmap_with(model: &KdeModel, x: &DVector<f64>, target: GradientTarget) -> Heatmap {
    let gamma = model.gamma();
    let n = model.training.n() as f64;
    let d = x.len();
    let f = model.log_density(x).exp();
    let mut relevance = DVector::zeros(d);
    for xj in model.training.iter_rows() {
        let diff = &xj - x;
        let weight = (-gamma * model.kernel.sq_dist(x, &xj)).exp();
        // grad_{x_j} s = (2 gamma / (n f)) * exp(-gamma d^2) * M (x_j - x);
        // the probe decomposition carries the opposite sign
        let m_diff = match &model.kernel {
            KernelSpec::Mahalanobis { m, .. } => m * &diff,
            _ => diff.clone(),
        };
        let sign = match target {
            GradientTarget::TrainingPoints => 1.0,
            GradientTarget::Probe => -1.0,
        };
        let grad = m_diff * (sign * 2.0 * gamma * weight / (n * f));
        relevance += 0.5 * diff.component_mul(&grad);
    }
    Heatmap {
        relevance,
        score: -f.ln(),
    }
}

/// Cosine similarity between the relevance vector and a {0,1} ground-truth
/// mask of the informative features.
pub fn explanation_accuracy(heatmap: &Heatmap, mask: &DVector<f64>) -> Result<f64> {
    if heatmap.relevance.len() != mask.len() {
        return Err(Error::DimensionMismatch {
            expected: mask.len(),
            got: heatmap.relevance.len(),
        });
    }
    let r_norm = heatmap.relevance.norm();
    if r_norm == 0.0 {
        return Err(Error::ZeroHeatmap);
    }
    let m_norm = mask.norm();
    if m_norm == 0.0 {
        return Err(Error::InvalidConfig("mask is all-zero".into()));
    }
    Ok(heatmap.relevance.dot(mask) / (r_norm * m_norm))
}

/// One CSV row per probe: `probe_id,score,R_1,...,R_D`.
pub fn write_heatmaps_csv<W: Write>(out: &mut W, heatmaps: &[(usize, Heatmap)]) -> Result<()> {
    let d = heatmaps.first().map(|(_, h)| h.relevance.len()).unwrap_or(0);
    let header: Vec<String> = std::iter::once("probe_id".to_string())
        .chain(std::iter::once("score".to_string()))
        .chain((1..=d).map(|i| format!("R_{i}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (id, h) in heatmaps {
        let mut row = vec![id.to_string(), format!("{}", h.score)];
        row.extend(h.relevance.iter().map(|v| format!("{v}")));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Plain-text PGM (P2) emission for grid-shaped relevance, linearly
/// rescaled to 0..255. Requires width * height = D.
pub fn write_heatmap_pgm<W: Write>(
    out: &mut W,
    heatmap: &Heatmap,
    width: usize,
    height: usize,
) -> Result<()> {
    if width * height != heatmap.relevance.len() {
        return Err(Error::DimensionMismatch {
            expected: heatmap.relevance.len(),
            got: width * height,
        });
    }
    let lo = heatmap.relevance.min();
    let hi = heatmap.relevance.max();
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    writeln!(out, "P2\n{width} {height}\n255")?;
    for r in 0..height {
        let row: Vec<String> = (0..width)
            .map(|c| {
                let v = heatmap.relevance[r * width + c];
                format!("{}", ((v - lo) / span * 255.0).round() as u8)
            })
            .collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}
