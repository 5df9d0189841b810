//! Vector quantization detectors: k-means (L2) and k-medians (L1) with
//! distance-to-nearest-prototype scoring.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VqNorm {
    L2,
    L1,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VqModel {
    /// K x D prototype matrix.
    pub prototypes: DMatrix<f64>,
    pub norm: VqNorm,
    /// Mean distance of training points to their assigned prototype, one
    /// entry per Lloyd iteration.
    pub objective_trace: Vec<f64>,
}

/// k-means++-style seeding: first index uniform, then each next prototype
/// drawn with probability proportional to squared distance to the nearest
/// chosen seed.
pub(crate) fn kmeans_pp_indices(x: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = x.nrows();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut d2: Vec<f64> = (0..n)
        .map(|i| (x.row(i) - x.row(chosen[0])).norm_squared())
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            rng.gen_range(0..n)
        } else {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        };
        chosen.push(next);
        for i in 0..n {
            d2[i] = d2[i].min((x.row(i) - x.row(next)).norm_squared());
        }
    }
    chosen
}

fn distance(norm: VqNorm, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    match norm {
        VqNorm::L2 => (a - b).norm_squared(),
        VqNorm::L1 => (a - b).abs().sum(),
    }
}

/// Lloyd iterations (means for L2, coordinate-wise medians for L1) from
/// seeded prototypes until the assignment reaches a fixpoint. Empty clusters
/// are reseeded from the farthest point.
pub fn fit_vq(train: &Dataset, k: usize, norm: VqNorm, seed: u64) -> Result<VqModel> {
    let n = train.n();
    if k == 0 || n < k {
        return Err(Error::TooFewSamples { need: k, got: n });
    }
    let d = train.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = kmeans_pp_indices(train.matrix(), k, &mut rng);
    let mut prototypes = DMatrix::from_fn(k, d, |c, j| train.matrix()[(seeds[c], j)]);
    let mut assignment = vec![usize::MAX; n];
    let mut trace = Vec::new();
    for _ in 0..1000 {
        // assignment step
        let mut changed = false;
        let mut objective = 0.0;
        for i in 0..n {
            let xi = train.row(i);
            let (best, dist) = (0..k)
                .map(|c| (c, distance(norm, &xi, &prototypes.row(c).transpose())))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            objective += dist;
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        trace.push(objective / n as f64);
        if !changed {
            break;
        }
        // update step
        for c in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == c).collect();
            if members.is_empty() {
                let farthest = (0..n)
                    .max_by(|&a, &b| {
                        let da = distance(norm, &train.row(a), &prototypes.row(assignment[a]).transpose());
                        let db = distance(norm, &train.row(b), &prototypes.row(assignment[b]).transpose());
                        da.partial_cmp(&db).unwrap()
                    })
                    .ok_or(Error::EmptyCluster(c))?;
                prototypes.row_mut(c).copy_from(&train.matrix().row(farthest));
                continue;
            }
            match norm {
                VqNorm::L2 => {
                    let mut mean = DVector::zeros(d);
                    for &i in &members {
                        mean += train.row(i);
                    }
                    mean /= members.len() as f64;
                    prototypes.row_mut(c).copy_from(&mean.transpose());
                }
                VqNorm::L1 => {
                    for j in 0..d {
                        let mut col: Vec<f64> =
                            members.iter().map(|&i| train.matrix()[(i, j)]).collect();
                        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
                        prototypes[(c, j)] = crate::data::quantile_sorted(&col, 0.5);
                    }
                }
            }
        }
    }
    Ok(VqModel {
        prototypes,
        norm,
        objective_trace: trace,
    })
}

impl VqModel {
    /// Distance to the nearest prototype: squared Euclidean for L2, L1
    /// distance for L1.
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        (0..self.prototypes.nrows())
            .map(|c| distance(self.norm, x, &self.prototypes.row(c).transpose()))
            .min_by(|a, b| a.partial_cmp(b).unwrap())
            .unwrap()
    }
}
