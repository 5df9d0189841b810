//! PCA anomaly detection by squared orthogonal projection error.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// d x D matrix with orthonormal rows (principal directions).
    pub components: DMatrix<f64>,
    /// Non-increasing eigenvalues of the retained components.
    pub explained_variance: Vec<f64>,
    pub variance_fraction: f64,
}

/// Centers on the training mean and keeps the smallest number of leading
/// eigenvectors whose eigenvalues reach `variance_fraction` of the total.
pub fn fit_pca(train: &Dataset, variance_fraction: f64) -> Result<PcaModel> {
    if train.n() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: train.n(),
        });
    }
    if !(0.0..=1.0).contains(&variance_fraction) || variance_fraction == 0.0 {
        return Err(Error::InvalidConfig(format!(
            "variance fraction {variance_fraction} outside (0, 1]"
        )));
    }
    let (mean, cov) = crate::prob::gaussian_mean_cov(train.matrix());
    let dim = train.dim();
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let mut kept = Vec::new();
    let mut acc = 0.0;
    for &idx in &order {
        let lambda = eig.eigenvalues[idx].max(0.0);
        // numerically zero directions never help reach the target
        if lambda <= 1e-12 * total {
            break;
        }
        kept.push(idx);
        acc += lambda;
        if acc >= variance_fraction * total - 1e-12 {
            break;
        }
    }
    if kept.is_empty() {
        kept.push(order[0]);
    }
    let mut components = DMatrix::zeros(kept.len(), dim);
    let mut explained = Vec::with_capacity(kept.len());
    for (j, &idx) in kept.iter().enumerate() {
        components.row_mut(j).copy_from(&eig.eigenvectors.column(idx).transpose());
        explained.push(eig.eigenvalues[idx].max(0.0));
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance: explained,
        variance_fraction,
    })
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    /// Squared residual of the orthogonal projection onto the retained
    /// subspace.
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        let centered = x - &self.mean;
        let coded = &self.components * &centered;
        let reconstructed = self.components.transpose() * coded;
        (centered - reconstructed).norm_squared()
    }

    /// Projector W^T W onto the retained subspace (D x D).
    pub fn projector(&self) -> DMatrix<f64> {
        self.components.transpose() * &self.components
    }
}
