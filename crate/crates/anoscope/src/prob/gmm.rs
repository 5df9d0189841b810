//! Gaussian mixture model fitted by expectation-maximization.

use super::{gaussian_log_density, log_sum_exp, psd_inverse};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::recon::kmeans_pp_indices;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
    #[serde(skip)]
    cached: Vec<(DMatrix<f64>, f64)>,
    pub log_likelihood_trace: Vec<f64>,
}

/// EM until the mean log-likelihood improves by less than `tol` or
/// `max_iter` is reached. Components are seeded k-means++-style; collapsed
/// covariances are resolved by a jitter floor.
pub fn fit_gmm(
    train: &Dataset,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<GmmModel> {
    let n = train.n();
    if k == 0 || n < k {
        return Err(Error::TooFewSamples { need: k, got: n });
    }
    let x = train.matrix();
    let d = train.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = kmeans_pp_indices(x, k, &mut rng);
    let (_, global_cov) = super::gaussian::mean_and_mle_cov(x);
    let floor = DMatrix::identity(d, d) * (1e-9 * global_cov.trace().max(1e-12) / d as f64 + 1e-12);
    let mut weights = vec![1.0 / k as f64; k];
    let mut means: Vec<DVector<f64>> = seeds.iter().map(|&i| train.row(i)).collect();
    let mut covariances = vec![&global_cov + &floor; k];
    let mut cached: Vec<(DMatrix<f64>, f64)> = covariances
        .iter()
        .map(psd_inverse)
        .collect::<Result<_>>()?;
    let mut trace = Vec::new();
    let mut prev_ll = f64::NEG_INFINITY;
    for _ in 0..max_iter {
        // E-step: log responsibilities
        let mut log_resp = DMatrix::zeros(n, k);
        let mut ll = 0.0;
        for i in 0..n {
            let xi = train.row(i);
            let comp: Vec<f64> = (0..k)
                .map(|c| {
                    weights[c].ln()
                        + gaussian_log_density(&xi, &means[c], &cached[c].0, cached[c].1)
                })
                .collect();
            let norm = log_sum_exp(&comp);
            ll += norm;
            for c in 0..k {
                log_resp[(i, c)] = comp[c] - norm;
            }
        }
        ll /= n as f64;
        trace.push(ll);
        if ll - prev_ll < tol && prev_ll.is_finite() {
            break;
        }
        prev_ll = ll;
        // M-step
        for c in 0..k {
            let resp: Vec<f64> = (0..n).map(|i| log_resp[(i, c)].exp()).collect();
            let nc: f64 = resp.iter().sum();
            if nc <= f64::MIN_POSITIVE {
                return Err(Error::DegenerateComponent(c));
            }
            weights[c] = nc / n as f64;
            let mut mean = DVector::zeros(d);
            for i in 0..n {
                mean += train.row(i) * resp[i];
            }
            mean /= nc;
            let mut cov = DMatrix::zeros(d, d);
            for i in 0..n {
                let diff = train.row(i) - &mean;
                cov += &diff * diff.transpose() * resp[i];
            }
            cov = cov / nc + &floor;
            cached[c] = psd_inverse(&cov).map_err(|_| Error::DegenerateComponent(c))?;
            means[c] = mean;
            covariances[c] = cov;
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
    }
    Ok(GmmModel {
        weights,
        means,
        covariances,
        cached,
        log_likelihood_trace: trace,
    })
}

impl GmmModel {
    /// Rebuild precision caches (needed after deserialization).
    pub fn refresh_cache(&mut self) -> Result<()> {
        self.cached = self
            .covariances
            .iter()
            .map(psd_inverse)
            .collect::<Result<_>>()?;
        Ok(())
    }

    pub fn log_density(&self, x: &DVector<f64>) -> f64 {
        let comp: Vec<f64> = (0..self.weights.len())
            .map(|c| {
                self.weights[c].ln()
                    + gaussian_log_density(x, &self.means[c], &self.cached[c].0, self.cached[c].1)
            })
            .collect();
        log_sum_exp(&comp)
    }

    /// Negative log-likelihood of the mixture.
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        -self.log_density(x)
    }
}
