//! Pairwise coordinate (SMO-style) solver for the shared one-class dual
//!
//! `min_a 1/2 a^T K a - p^T a` subject to `0 <= a_i <= C`, `sum_i a_i = 1`,
//! which covers both SVDD (p_i = k_ii / 2) and the OC-SVM (p = 0).

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

pub(crate) struct SmoSolution {
    pub alphas: Vec<f64>,
    #[allow(dead_code)]
    pub iterations: usize,
}

const MAX_ITER: usize = 100_000;

pub(crate) fn solve(k: &DMatrix<f64>, p: &DVector<f64>, c: f64, kkt_tol: f64) -> Result<SmoSolution> {
    let n = k.nrows();
    debug_assert!(c * n as f64 >= 1.0 - 1e-12, "box must admit the simplex");
    let mut alphas = vec![1.0 / n as f64; n];
    // gradient of the objective: K a - p
    let mut grad: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| k[(i, j)] * alphas[j]).sum::<f64>() - p[i])
        .collect();
    let mut iterations = 0;
    loop {
        // maximal violating pair: mass flows from the largest gradient
        // (among a_j > 0) to the smallest (among a_i < C)
        let mut up: Option<usize> = None;
        let mut down: Option<usize> = None;
        for idx in 0..n {
            if alphas[idx] < c - f64::EPSILON && up.is_none_or(|u| grad[idx] < grad[u]) {
                up = Some(idx);
            }
            if alphas[idx] > f64::EPSILON && down.is_none_or(|d| grad[idx] > grad[d]) {
                down = Some(idx);
            }
        }
        let (Some(i), Some(j)) = (up, down) else {
            break;
        };
        let violation = grad[j] - grad[i];
        if violation < kkt_tol {
            break;
        }
        if iterations >= MAX_ITER {
            return Err(Error::SolverNotConverged {
                iterations,
                violation,
            });
        }
        iterations += 1;
        let eta = k[(i, i)] - 2.0 * k[(i, j)] + k[(j, j)];
        let max_step = (c - alphas[i]).min(alphas[j]);
        let step = if eta > f64::EPSILON {
            (violation / eta).min(max_step)
        } else {
            max_step
        };
        alphas[i] += step;
        alphas[j] -= step;
        for idx in 0..n {
            grad[idx] += step * (k[(idx, i)] - k[(idx, j)]);
        }
    }
    Ok(SmoSolution { alphas, iterations })
}

/// Objective value 1/2 a^T K a - p^T a.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn objective(k: &DMatrix<f64>, p: &DVector<f64>, alphas: &[f64]) -> f64 {
    let a = DVector::from_column_slice(alphas);
    0.5 * a.dot(&(k * &a)) - p.dot(&a)
}

/// Largest violation of the box and simplex constraints.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn feasibility_violation(alphas: &[f64], c: f64) -> f64 {
    let box_violation = alphas
        .iter()
        .map(|&a| (-a).max(a - c).max(0.0))
        .fold(0.0, f64::max);
    let sum: f64 = alphas.iter().sum();
    box_violation.max((sum - 1.0).abs())
}


#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>() - 0.5);
        &b * b.transpose() + DMatrix::identity(n, n) * 0.1
    }

    #[test]
    fn matches_projected_gradient_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..8 {
            let n = 5 + trial % 4;
            let k = random_psd(n, &mut rng);
            let p = DVector::from_fn(n, |i, _| 0.5 * k[(i, i)]);
            let c = 1.0 / (0.4 * n as f64);
            let smo = solve(&k, &p, c, 1e-9).unwrap();
            let pg = oracle::solve(&k, &p, c, 40_000);
            for i in 0..n {
                assert!(
                    (smo.alphas[i] - pg[i]).abs() < 1e-4,
                    "trial {trial}, alpha[{i}]: {} vs {}",
                    smo.alphas[i],
                    pg[i]
                );
            }
            let diff = (objective(&k, &p, &smo.alphas) - objective(&k, &p, &pg)).abs();
            assert!(diff < 1e-6, "objective gap {diff}");
        }
    }

    #[test]
    fn solution_is_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let k = random_psd(12, &mut rng);
        let p = DVector::zeros(12);
        let c = 1.0 / (0.2 * 12.0);
        let sol = solve(&k, &p, c, 1e-6).unwrap();
        assert!(feasibility_violation(&sol.alphas, c) < 1e-8);
    }

    #[test]
    fn tight_box_forces_uniform_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 7;
        let k = random_psd(n, &mut rng);
        let p = DVector::zeros(n);
        let sol = solve(&k, &p, 1.0 / n as f64, 1e-6).unwrap();
        for a in sol.alphas {
            assert_relative_eq!(a, 1.0 / n as f64, epsilon = 1e-12);
        }
    }
}
