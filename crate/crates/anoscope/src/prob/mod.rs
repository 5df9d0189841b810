//! Probabilistic detectors scoring by (monotone transforms of) negative
//! log-likelihood.

mod gaussian;
mod gmm;
mod kde;
mod ppca;

pub use gaussian::{fit_gaussian, GaussianModel};
pub(crate) use gaussian::mean_and_mle_cov as gaussian_mean_cov;
pub use gmm::{fit_gmm, GmmModel};
pub use kde::{fit_kde, gamma_grid, select_bandwidth, KdeModel};
pub use ppca::{fit_ppca, PpcaModel};

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

pub(crate) const LN_2PI: f64 = 1.8378770664093453;

/// Inverts a symmetric PSD matrix, retrying once with a jitter floor of
/// 1e-9 * trace / D on the diagonal. Returns (precision, log_det).
pub(crate) fn psd_inverse(cov: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let d = cov.nrows();
    let attempt = |c: &DMatrix<f64>| -> Option<(DMatrix<f64>, f64)> {
        let chol = c.clone().cholesky()?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Some((chol.inverse(), log_det))
    };
    if let Some(r) = attempt(cov) {
        return Ok(r);
    }
    let jitter = 1e-9 * cov.trace().max(1e-300) / d as f64;
    let jittered = cov + DMatrix::identity(d, d) * jitter;
    attempt(&jittered).ok_or(Error::SingularCovariance)
}

/// log N(x; mean, cov) given the cached precision and log-determinant.
pub(crate) fn gaussian_log_density(
    x: &DVector<f64>,
    mean: &DVector<f64>,
    precision: &DMatrix<f64>,
    log_det: f64,
) -> f64 {
    let diff = x - mean;
    let maha = diff.dot(&(precision * &diff));
    -0.5 * (x.len() as f64 * LN_2PI + log_det + maha)
}

/// Numerically stable log(sum(exp(v))).
pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
