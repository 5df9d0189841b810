//! Kernel PCA with stored centering statistics for exact out-of-sample
//! reconstruction error scoring in feature space.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KpcaModel {
    pub training: Dataset,
    pub kernel: KernelSpec,
    /// n x d dual coefficients; column j is the unit eigenvector of the
    /// centered Gram matrix scaled by 1 / sqrt(lambda_j), so each feature
    /// space component has unit norm.
    pub coefficients: DMatrix<f64>,
    /// Non-increasing positive eigenvalues of the retained components.
    pub eigenvalues: Vec<f64>,
    /// Per-row means of the uncentered Gram matrix.
    pub row_means: Vec<f64>,
    /// Grand mean of the uncentered Gram matrix.
    pub grand_mean: f64,
}

/// Eigendecomposes the double-centered Gram matrix and keeps components up
/// to `variance_fraction` of the positive spectrum.
pub fn fit_kpca(train: &Dataset, kernel: KernelSpec, variance_fraction: f64) -> Result<KpcaModel> {
    let n = train.n();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    if !(0.0..=1.0).contains(&variance_fraction) || variance_fraction == 0.0 {
        return Err(Error::InvalidConfig(format!(
            "variance fraction {variance_fraction} outside (0, 1]"
        )));
    }
    let gram = kernel.gram(train.matrix());
    let row_means: Vec<f64> = (0..n).map(|i| gram.row(i).sum() / n as f64).collect();
    let grand_mean = row_means.iter().sum::<f64>() / n as f64;
    let mut centered = gram;
    for i in 0..n {
        for j in 0..n {
            centered[(i, j)] += grand_mean - row_means[i] - row_means[j];
        }
    }
    let eig = centered.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let scale = eig.eigenvalues[order[0]].max(0.0);
    if eig.eigenvalues.iter().any(|&l| l < -1e-8 * (scale + 1.0)) {
        return Err(Error::NonPsdKernelMatrix);
    }
    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    if total <= 0.0 {
        return Err(Error::NonPsdKernelMatrix);
    }
    let mut kept = Vec::new();
    let mut acc = 0.0;
    for &idx in &order {
        let lambda = eig.eigenvalues[idx];
        if lambda <= 1e-10 * scale {
            break;
        }
        kept.push(idx);
        acc += lambda;
        if acc >= variance_fraction * total - 1e-12 {
            break;
        }
    }
    if kept.is_empty() {
        return Err(Error::NonPsdKernelMatrix);
    }
    let mut coefficients = DMatrix::zeros(n, kept.len());
    let mut eigenvalues = Vec::with_capacity(kept.len());
    for (j, &idx) in kept.iter().enumerate() {
        let lambda = eig.eigenvalues[idx];
        coefficients.set_column(j, &(eig.eigenvectors.column(idx) / lambda.sqrt()));
        eigenvalues.push(lambda);
    }
    Ok(KpcaModel {
        training: train.clone(),
        kernel,
        coefficients,
        eigenvalues,
        row_means,
        grand_mean,
    })
}

impl KpcaModel {
    pub fn n_components(&self) -> usize {
        self.coefficients.ncols()
    }

    /// Feature-space squared reconstruction error
    /// ||phi~(x)||^2 - sum_j <phi~(x), v_j>^2, all inner products expanded
    /// to kernel evaluations with the stored centering statistics.
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        let n = self.training.n() as f64;
        let k_x = self.kernel.row(self.training.matrix(), x);
        let k_x_mean = k_x.sum() / n;
        let self_sim = match &self.kernel {
            KernelSpec::Linear => x.dot(x),
            _ => 1.0,
        };
        let centered_norm2 = self_sim - 2.0 * k_x_mean + self.grand_mean;
        let centered_k = DVector::from_fn(k_x.len(), |i, _| {
            k_x[i] - k_x_mean - self.row_means[i] + self.grand_mean
        });
        let projections = self.coefficients.transpose() * centered_k;
        (centered_norm2 - projections.norm_squared()).max(0.0)
    }
}

/// Kernel width heuristic: gamma = ln 2 / median squared pairwise distance,
/// so the similarity at the median neighbor distance is exactly one half and
/// the nearer half of the neighbor pairs carries at least half of the total
/// similarity mass.
pub fn select_kpca_gamma(train: &Dataset) -> Result<f64> {
    let n = train.n();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    let mut d2: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d2.push((train.row(i) - train.row(j)).norm_squared());
        }
    }
    d2.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = crate::data::quantile_sorted(&d2, 0.5);
    if median <= 0.0 {
        return Err(Error::InvalidConfig("all pairwise distances are zero".into()));
    }
    Ok(2f64.ln() / median)
}
