//! Kernel functions and Gram matrix machinery shared by KDE, SVDD, OC-SVM,
//! and kernel PCA.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Kernel family plus parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    /// k(x, y) = exp(-gamma * ||x - y||^2)
    Rbf { gamma: f64 },
    /// k(x, y) = <x, y>
    Linear,
    /// k(x, y) = exp(-gamma * (x - y)^T M (x - y)) with M symmetric PSD.
    Mahalanobis { gamma: f64, m: DMatrix<f64> },
}

/// Builds a Mahalanobis kernel, validating that `m` is symmetric PSD.
/// `m = I` recovers the plain RBF kernel.
pub fn mahalanobis_kernel(gamma: f64, m: DMatrix<f64>) -> Result<KernelSpec> {
    if gamma <= 0.0 {
        return Err(Error::NonPositiveGamma(gamma));
    }
    if m.nrows() != m.ncols() {
        return Err(Error::NonPsdMatrix);
    }
    let sym_err: f64 = (&m - m.transpose()).abs().max();
    if sym_err > 1e-10 * (1.0 + m.abs().max()) {
        return Err(Error::NonPsdMatrix);
    }
    let eig = m.clone().symmetric_eigen();
    let scale = eig.eigenvalues.abs().max();
    if eig.eigenvalues.iter().any(|&l| l < -1e-10 * (1.0 + scale)) {
        return Err(Error::NonPsdMatrix);
    }
    Ok(KernelSpec::Mahalanobis { gamma, m })
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Result<Self> {
        if gamma <= 0.0 {
            return Err(Error::NonPositiveGamma(gamma));
        }
        Ok(KernelSpec::Rbf { gamma })
    }

    /// Squared distance in the metric the kernel exponentiates (RBF and
    /// Mahalanobis only).
    pub fn sq_dist(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let diff = x - y;
        match self {
            KernelSpec::Rbf { .. } | KernelSpec::Linear => diff.norm_squared(),
            KernelSpec::Mahalanobis { m, .. } => diff.dot(&(m * &diff)),
        }
    }

    pub fn eval(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        match self {
            KernelSpec::Rbf { gamma } => (-gamma * self.sq_dist(x, y)).exp(),
            KernelSpec::Linear => x.dot(y),
            KernelSpec::Mahalanobis { gamma, .. } => (-gamma * self.sq_dist(x, y)).exp(),
        }
    }

    /// True for kernels with constant diagonal k(x, x) = 1.
    pub fn constant_norm(&self) -> bool {
        !matches!(self, KernelSpec::Linear)
    }

    /// Gram matrix over the rows of `points`.
    pub fn gram(&self, points: &DMatrix<f64>) -> DMatrix<f64> {
        let n = points.nrows();
        let rows: Vec<DVector<f64>> = (0..n).map(|i| points.row(i).transpose()).collect();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.eval(&rows[i], &rows[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    /// Kernel evaluations of `x` against every row of `points`.
    pub fn row(&self, points: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(points.nrows(), |i, _| {
            self.eval(&points.row(i).transpose(), x)
        })
    }
}
