//! Probabilistic PCA in closed form from the covariance eigendecomposition.

use super::psd_inverse;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PpcaModel {
    /// D x d loading matrix.
    pub loading: DMatrix<f64>,
    pub sigma2: f64,
    pub mean: DVector<f64>,
    #[serde(skip)]
    cached: Option<(DMatrix<f64>, f64)>,
}

/// Maximum-likelihood pPCA: sigma^2 is the mean of the D - d smallest
/// covariance eigenvalues and the loadings are U_d (L_d - sigma^2 I)^{1/2}.
pub fn fit_ppca(train: &Dataset, d: usize) -> Result<PpcaModel> {
    let dim = train.dim();
    if d == 0 || d >= dim {
        return Err(Error::InvalidConfig(format!("need 1 <= d < D, got d={d}, D={dim}")));
    }
    if train.n() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: train.n(),
        });
    }
    let (mean, cov) = super::gaussian::mean_and_mle_cov(train.matrix());
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    if (0..d).any(|i| eig.eigenvalues[order[i]] <= 0.0) {
        return Err(Error::RankDeficient(d));
    }
    let sigma2 = (d..dim)
        .map(|i| eig.eigenvalues[order[i]].max(0.0))
        .sum::<f64>()
        / (dim - d) as f64;
    let mut loading = DMatrix::zeros(dim, d);
    for (j, &idx) in order[..d].iter().enumerate() {
        let scale = (eig.eigenvalues[idx] - sigma2).max(0.0).sqrt();
        loading.set_column(j, &(eig.eigenvectors.column(idx) * scale));
    }
    let mut model = PpcaModel {
        loading,
        sigma2,
        mean,
        cached: None,
    };
    model.refresh_cache()?;
    Ok(model)
}

impl PpcaModel {
    /// Model covariance W W^T + sigma^2 I (D x D).
    pub fn model_covariance(&self) -> DMatrix<f64> {
        let d = self.mean.len();
        &self.loading * self.loading.transpose() + DMatrix::identity(d, d) * self.sigma2
    }

    pub fn refresh_cache(&mut self) -> Result<()> {
        self.cached = Some(psd_inverse(&self.model_covariance())?);
        Ok(())
    }

    /// Negative log-likelihood under N(mean, W W^T + sigma^2 I).
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        let (precision, log_det) = self.cached.as_ref().expect("cache initialized");
        -super::gaussian_log_density(x, &self.mean, precision, *log_det)
    }
}
