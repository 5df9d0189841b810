//! Multivariate Gaussian baseline scoring by Mahalanobis distance.

use super::psd_inverse;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianModel {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub precision: DMatrix<f64>,
    pub log_det: f64,
}

/// MLE mean and covariance (1/n denominator). The anomaly score is the
/// squared Mahalanobis distance, a monotone transform of the negative
/// log-likelihood.
pub fn fit_gaussian(train: &Dataset) -> Result<GaussianModel> {
    if train.n() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: train.n(),
        });
    }
    let (mean, covariance) = mean_and_mle_cov(train.matrix());
    let (precision, log_det) = psd_inverse(&covariance)?;
    Ok(GaussianModel {
        mean,
        covariance,
        precision,
        log_det,
    })
}

pub(crate) fn mean_and_mle_cov(x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = x.nrows() as f64;
    let mean = x.row_mean().transpose();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / n;
    (mean, cov)
}

impl GaussianModel {
    /// Squared Mahalanobis distance to the mean.
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        diff.dot(&(&self.precision * &diff))
    }

    /// Negative log-likelihood under N(mean, covariance).
    pub fn nll(&self, x: &DVector<f64>) -> f64 {
        -super::gaussian_log_density(x, &self.mean, &self.precision, self.log_det)
    }
}
