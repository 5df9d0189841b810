//! Minimum volume ellipsoid via a FastMCD-style covariance determinant
//! search with C-step refinement.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::prob::gaussian_mean_cov;
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const N_STARTS: usize = 20;
const N_CSTEPS: usize = 10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MveModel {
    pub center: DVector<f64>,
    pub shape: DMatrix<f64>,
    #[serde(skip)]
    precision: Option<DMatrix<f64>>,
    pub r2: f64,
    pub support_fraction: f64,
    pub support_indices: Vec<usize>,
    /// Covariance determinants over the C-steps of the winning start.
    pub det_trace: Vec<f64>,
}

fn fit_subset(data: &Dataset, subset: &[usize]) -> Option<(DVector<f64>, DMatrix<f64>, DMatrix<f64>, f64)> {
    let sub = data.select(subset);
    let (mean, cov) = gaussian_mean_cov(sub.matrix());
    let chol = cov.clone().cholesky()?;
    let det = chol.l().diagonal().iter().map(|v| v * v).product();
    Some((mean, cov, chol.inverse(), det))
}

fn h_smallest(data: &Dataset, mean: &DVector<f64>, precision: &DMatrix<f64>, h: usize) -> Vec<usize> {
    let mut dist: Vec<(usize, f64)> = (0..data.n())
        .map(|i| {
            let diff = data.row(i) - mean;
            (i, diff.dot(&(precision * &diff)))
        })
        .collect();
    dist.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let mut idx: Vec<usize> = dist[..h].iter().map(|&(i, _)| i).collect();
    idx.sort_unstable();
    idx
}

/// FastMCD alternation: random elemental (D+1)-subsets, then C-steps that
/// refit on the h*n points with smallest Mahalanobis distance until the
/// determinant stops decreasing. R^2 is set as the (1 - contamination)
/// quantile of the support distances; score(x) = d^2(x) - R^2.
pub fn fit_mve(train: &Dataset, support_fraction: f64, contamination: f64, seed: u64) -> Result<MveModel> {
    let n = train.n();
    let d = train.dim();
    let h = (support_fraction * n as f64).ceil() as usize;
    if !(0.5..=1.0).contains(&support_fraction) || h < d + 1 || h > n {
        return Err(Error::InvalidConfig(format!(
            "support fraction {support_fraction} needs ceil(h n) in [D+1, n]"
        )));
    }
    if !(0.0..1.0).contains(&contamination) {
        return Err(Error::InvalidConfig(format!("contamination {contamination} outside [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    let mut failures = 0;
    for _ in 0..N_STARTS {
        // elemental start: D+1 distinct rows
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let mut subset: Vec<usize> = idx[..(d + 1).min(n)].to_vec();
        let Some((mut mean, _, mut precision, _)) = fit_subset(train, &subset) else {
            failures += 1;
            continue;
        };
        let mut trace = Vec::new();
        let mut prev_det = f64::INFINITY;
        for _ in 0..N_CSTEPS {
            subset = h_smallest(train, &mean, &precision, h);
            let Some((m, _, p, det)) = fit_subset(train, &subset) else {
                break;
            };
            mean = m;
            precision = p;
            trace.push(det);
            if det >= prev_det - 1e-14 * prev_det.abs().max(1.0) {
                break;
            }
            prev_det = det;
        }
        if let Some(&det) = trace.last() {
            if best.as_ref().is_none_or(|(b, _, _)| det < *b) {
                best = Some((det, subset, trace));
            }
        } else {
            failures += 1;
        }
    }
    let Some((_, support, det_trace)) = best else {
        return Err(Error::SingularSubset(failures));
    };
    let (center, shape, precision, _) = fit_subset(train, &support).ok_or(Error::SingularSubset(failures))?;
    let mut support_dist: Vec<f64> = support
        .iter()
        .map(|&i| {
            let diff = train.row(i) - &center;
            diff.dot(&(&precision * &diff))
        })
        .collect();
    support_dist.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let r2 = crate::data::quantile_sorted(&support_dist, 1.0 - contamination);
    Ok(MveModel {
        center,
        shape,
        precision: Some(precision),
        r2,
        support_fraction,
        support_indices: support,
        det_trace,
    })
}

impl MveModel {
    pub fn refresh_cache(&mut self) -> Result<()> {
        let chol = self
            .shape
            .clone()
            .cholesky()
            .ok_or(Error::SingularCovariance)?;
        self.precision = Some(chol.inverse());
        Ok(())
    }

    /// Signed decision value (x - c)^T Sigma^-1 (x - c) - R^2.
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        let precision = self.precision.as_ref().expect("cache initialized");
        let diff = x - &self.center;
        diff.dot(&(precision * &diff)) - self.r2
    }
}
