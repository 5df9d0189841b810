//! Kernel density estimation with negative log-likelihood scoring and
//! hold-out bandwidth selection.

use super::log_sum_exp;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KdeModel {
    pub training: Dataset,
    pub kernel: KernelSpec,
}

/// KDE under an RBF or Mahalanobis kernel with rate `gamma` (inverse squared
/// bandwidth scale).
pub fn fit_kde(train: &Dataset, kernel: KernelSpec) -> Result<KdeModel> {
    let gamma = match &kernel {
        KernelSpec::Rbf { gamma } => *gamma,
        KernelSpec::Mahalanobis { gamma, .. } => *gamma,
        KernelSpec::Linear => {
            return Err(Error::InvalidConfig(
                "KDE requires an RBF or Mahalanobis kernel".into(),
            ))
        }
    };
    if gamma <= 0.0 {
        return Err(Error::NonPositiveGamma(gamma));
    }
    Ok(KdeModel {
        training: train.clone(),
        kernel,
    })
}

impl KdeModel {
    pub fn gamma(&self) -> f64 {
        match &self.kernel {
            KernelSpec::Rbf { gamma } | KernelSpec::Mahalanobis { gamma, .. } => *gamma,
            KernelSpec::Linear => unreachable!("constructor rejects linear kernels"),
        }
    }

    /// log of (1/n) sum_i exp(-gamma * dist^2(x, x_i)), via log-sum-exp.
    pub fn log_density(&self, x: &DVector<f64>) -> f64 {
        let gamma = self.gamma();
        let terms: Vec<f64> = self
            .training
            .iter_rows()
            .map(|xi| -gamma * self.kernel.sq_dist(x, &xi))
            .collect();
        log_sum_exp(&terms) - (self.training.n() as f64).ln()
    }

    /// Negative log-likelihood score.
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        -self.log_density(x)
    }
}

/// The gamma grid {(2^i D)^-1, i = -5..5} spanning a log2 range scaled by
/// the data dimensionality.
pub fn gamma_grid(dim: usize) -> Vec<f64> {
    (-5..=5)
        .map(|i| 1.0 / (2f64.powi(i) * dim as f64))
        .collect()
}

/// Picks the grid gamma maximizing the mean hold-out log-likelihood.
///
/// `log_density` omits the kernel normalizer (a per-gamma constant that
/// cancels in rankings); selection must add it back, else smaller gammas
/// always win.
pub fn select_bandwidth(train: &Dataset, holdout: &Dataset) -> Result<f64> {
    if holdout.n() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    let d = train.dim() as f64;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for gamma in gamma_grid(train.dim()) {
        let model = fit_kde(train, KernelSpec::Rbf { gamma })?;
        // RBF normalizer: integral of exp(-gamma |u|^2) over R^D is (pi/gamma)^(D/2)
        let log_norm = 0.5 * d * (gamma / std::f64::consts::PI).ln();
        let ll: f64 = holdout.iter_rows().map(|x| model.log_density(&x)).sum::<f64>()
            / holdout.n() as f64
            + log_norm;
        if ll > best.0 {
            best = (ll, gamma);
        }
    }
    Ok(best.1)
}
