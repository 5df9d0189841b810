//! Kernel SVDD and OC-SVM dual solvers, the one-class hinge loss, and
//! validation-driven hyperparameter selection.

use super::smo;
use crate::dataset::{Dataset, Label};
use crate::error::{Error, Result};
use crate::eval::{auroc, LabeledScores};
use crate::kernel::KernelSpec;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

const KKT_TOL: f64 = 1e-6;
/// Tolerance on the alpha bounds when classifying support vectors.
const BOUND_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvddModel {
    pub training: Dataset,
    pub kernel: KernelSpec,
    pub alphas: Vec<f64>,
    pub support_indices: Vec<usize>,
    pub r2: f64,
    pub nu: f64,
    /// Cached quadratic form a^T K a (the center self-similarity).
    center_norm2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OcsvmModel {
    pub training: Dataset,
    pub kernel: KernelSpec,
    pub alphas: Vec<f64>,
    pub support_indices: Vec<usize>,
    pub rho: f64,
    pub nu: f64,
}

fn check_nu(nu: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&nu) || nu == 0.0 {
        return Err(Error::InvalidNu(nu));
    }
    Ok(())
}

fn support_and_boundary(alphas: &[f64], c: f64) -> (Vec<usize>, Vec<usize>) {
    let support: Vec<usize> = (0..alphas.len()).filter(|&i| alphas[i] > BOUND_TOL).collect();
    let boundary: Vec<usize> = support
        .iter()
        .copied()
        .filter(|&i| alphas[i] < c - BOUND_TOL)
        .collect();
    (support, boundary)
}

/// Solves the SVDD dual max_a sum_i a_i k_ii - a^T K a under the box and
/// simplex constraints. The center c = sum_i a_i phi(x_i) stays implicit;
/// R^2 is recovered as the mean boundary-support-vector distance.
pub fn fit_svdd(train: &Dataset, kernel: KernelSpec, nu: f64) -> Result<SvddModel> {
    check_nu(nu)?;
    let n = train.n();
    let c = 1.0 / (nu * n as f64);
    let gram = kernel.gram(train.matrix());
    // for constant-norm kernels p^T a = k_11 / 2 on the simplex, so the dual
    // reduces to the OC-SVM's; solving the reduced form keeps the two models'
    // alphas (and therefore score rankings) bitwise identical
    let p = if kernel.constant_norm() {
        DVector::zeros(n)
    } else {
        DVector::from_fn(n, |i, _| 0.5 * gram[(i, i)])
    };
    let sol = smo::solve(&gram, &p, c, KKT_TOL)?;
    let alphas = sol.alphas;
    let a = DVector::from_column_slice(&alphas);
    let k_alpha = &gram * &a;
    let center_norm2 = a.dot(&k_alpha);
    let (support, boundary) = support_and_boundary(&alphas, c);
    // distance of point i to the center: k_ii - 2 (K a)_i + a^T K a
    let dist2 = |i: usize| gram[(i, i)] - 2.0 * k_alpha[i] + center_norm2;
    let r2 = if boundary.is_empty() {
        support.iter().map(|&i| dist2(i)).sum::<f64>() / support.len() as f64
    } else {
        boundary.iter().map(|&i| dist2(i)).sum::<f64>() / boundary.len() as f64
    };
    Ok(SvddModel {
        training: train.clone(),
        kernel,
        alphas,
        support_indices: support,
        r2,
        nu,
        center_norm2,
    })
}

impl SvddModel {
    /// Signed decision value ||phi(x) - c||^2 - R^2; negative inside.
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        let k_x = self.kernel.row(self.training.matrix(), x);
        let cross: f64 = self
            .alphas
            .iter()
            .zip(k_x.iter())
            .map(|(a, k)| a * k)
            .sum();
        let self_sim = self.kernel.eval(x, x);
        self_sim - 2.0 * cross + self.center_norm2 - self.r2
    }

    pub fn box_bound(&self) -> f64 {
        1.0 / (self.nu * self.training.n() as f64)
    }
}

/// Solves the OC-SVM dual min 1/2 a^T K a under the same constraints; rho is
/// the mean margin over boundary support vectors.
pub fn fit_ocsvm(train: &Dataset, kernel: KernelSpec, nu: f64) -> Result<OcsvmModel> {
    check_nu(nu)?;
    let n = train.n();
    let c = 1.0 / (nu * n as f64);
    let gram = kernel.gram(train.matrix());
    let p = DVector::zeros(n);
    let sol = smo::solve(&gram, &p, c, KKT_TOL)?;
    let alphas = sol.alphas;
    let a = DVector::from_column_slice(&alphas);
    let k_alpha = &gram * &a;
    let (support, boundary) = support_and_boundary(&alphas, c);
    let rho = if boundary.is_empty() {
        support.iter().map(|&i| k_alpha[i]).sum::<f64>() / support.len() as f64
    } else {
        boundary.iter().map(|&i| k_alpha[i]).sum::<f64>() / boundary.len() as f64
    };
    Ok(OcsvmModel {
        training: train.clone(),
        kernel,
        alphas,
        support_indices: support,
        rho,
        nu,
    })
}

impl OcsvmModel {
    /// Signed decision value rho - <w, phi(x)>; positive outside the margin.
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        let k_x = self.kernel.row(self.training.matrix(), x);
        let cross: f64 = self
            .alphas
            .iter()
            .zip(k_x.iter())
            .map(|(a, k)| a * k)
            .sum();
        self.rho - cross
    }
}

/// The shifted, cost-weighted one-class hinge:
/// l(s, +1) = max(0, s) / (1 + nu), l(s, -1) = nu max(0, -s) / (1 + nu).
pub fn one_class_hinge(s: f64, y: Label, nu: f64) -> Result<f64> {
    match y {
        Label::Normal => Ok(s.max(0.0) / (1.0 + nu)),
        Label::Anomaly => Ok(nu * (-s).max(0.0) / (1.0 + nu)),
        Label::Unlabeled => Err(Error::UnlabeledInput),
    }
}

/// Input-space SVDD trained by full-batch subgradient descent on
/// R^2 + 1/(nu n) sum max(0, ||x_i - c||^2 - R^2), plus the semi-supervised
/// term max(0, y_j s_j) over labeled rows when `use_labels` is set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputSvddModel {
    pub center: DVector<f64>,
    pub r2: f64,
    pub nu: f64,
}

pub fn fit_svdd_primal(
    train: &Dataset,
    nu: f64,
    use_labels: bool,
    lr: f64,
    epochs: usize,
) -> Result<InputSvddModel> {
    check_nu(nu)?;
    let n = train.n() as f64;
    let mut center = train.matrix().row_mean().transpose();
    let mut r2 = train
        .iter_rows()
        .map(|x| (x - &center).norm_squared())
        .sum::<f64>()
        / n;
    for _ in 0..epochs {
        let mut grad_c = DVector::zeros(train.dim());
        let mut grad_r2 = 1.0;
        for (i, x) in train.iter_rows().enumerate() {
            let s = (&x - &center).norm_squared() - r2;
            let labeled = train.labels()[i] != Label::Unlabeled;
            if use_labels && labeled {
                // semi-supervised hinge max(0, y s)
                let y = train.labels()[i].sign().unwrap();
                if y * s > 0.0 {
                    grad_c += (&x - &center) * (-2.0 * y) / n;
                    grad_r2 += -y / n;
                }
            } else if s > 0.0 {
                grad_c += (&x - &center) * (-2.0 / (nu * n));
                grad_r2 += -1.0 / (nu * n);
            }
        }
        center -= grad_c * lr;
        r2 = (r2 - lr * grad_r2).max(0.0);
    }
    Ok(InputSvddModel { center, r2, nu })
}

impl InputSvddModel {
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        (x - &self.center).norm_squared() - self.r2
    }
}

/// Exhaustive grid search over (nu, gamma) maximizing validation AUROC with
/// ties broken toward larger gamma.
pub fn select_nu_and_gamma(
    train: &Dataset,
    val: &Dataset,
    nu_grid: &[f64],
    gamma_grid: &[f64],
) -> Result<(f64, f64, f64)> {
    let has_anom = val.labels().iter().any(|l| *l == Label::Anomaly);
    let has_norm = val.labels().iter().any(|l| *l == Label::Normal);
    if !has_anom || !has_norm {
        return Err(Error::NoLabeledValidation);
    }
    let labeled_idx: Vec<usize> = (0..val.n())
        .filter(|&i| val.labels()[i] != Label::Unlabeled)
        .collect();
    let mut best: Option<(f64, f64, f64)> = None;
    for &nu in nu_grid {
        for &gamma in gamma_grid {
            let model = fit_svdd(train, KernelSpec::Rbf { gamma }, nu)?;
            let pairs: Vec<(f64, Label)> = labeled_idx
                .iter()
                .map(|&i| (model.score(&val.row(i)), val.labels()[i]))
                .collect();
            let auc = auroc(&LabeledScores::new(pairs)?)?;
            let better = match best {
                None => true,
                Some((_, bg, ba)) => auc > ba || (auc == ba && gamma > bg),
            };
            if better {
                best = Some((nu, gamma, auc));
            }
        }
    }
    Ok(best.expect("grids are nonempty"))
}

/// The nu grid used by the benchmark setup.
pub fn default_nu_grid() -> Vec<f64> {
    vec![0.01, 0.05, 0.1, 0.2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oneclass::smo::{feasibility_violation, objective, oracle};
    use crate::prob::fit_kde;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_fixture(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen::<f64>() * 2.0, rng.gen::<f64>() * 2.0])
            .collect();
        Dataset::from_rows(&pts, vec![Label::Unlabeled; n]).unwrap()
    }

    #[test]
    fn nu_one_gives_kernel_mean_center() {
        let ds = random_fixture(8, 1);
        let m = fit_svdd(&ds, KernelSpec::Rbf { gamma: 0.5 }, 1.0).unwrap();
        for &a in &m.alphas {
            assert_relative_eq!(a, 1.0 / 8.0, epsilon = 1e-12);
        }
        let o = fit_ocsvm(&ds, KernelSpec::Rbf { gamma: 0.5 }, 1.0).unwrap();
        for &a in &o.alphas {
            assert_relative_eq!(a, 1.0 / 8.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn duals_match_projected_gradient_oracle() {
        for seed in [2, 3] {
            let ds = random_fixture(5, seed);
            let kernel = KernelSpec::Rbf { gamma: 1.0 };
            let gram = kernel.gram(ds.matrix());
            let nu = 0.4;
            let c = 1.0 / (nu * 5.0);
            let svdd = fit_svdd(&ds, kernel.clone(), nu).unwrap();
            let p_svdd = DVector::from_fn(5, |i, _| 0.5 * gram[(i, i)]);
            let pg = oracle::solve(&gram, &p_svdd, c, 40_000);
            for i in 0..5 {
                assert!((svdd.alphas[i] - pg[i]).abs() < 1e-4);
            }
            assert!(
                (objective(&gram, &p_svdd, &svdd.alphas) - objective(&gram, &p_svdd, &pg)).abs()
                    < 1e-6
            );
            let ocsvm = fit_ocsvm(&ds, kernel, nu).unwrap();
            let p_zero = DVector::zeros(5);
            let pg = oracle::solve(&gram, &p_zero, c, 40_000);
            for i in 0..5 {
                assert!((ocsvm.alphas[i] - pg[i]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn dual_feasibility_after_solve() {
        let ds = random_fixture(30, 4);
        let m = fit_svdd(&ds, KernelSpec::Rbf { gamma: 1.0 }, 0.2).unwrap();
        assert!(feasibility_violation(&m.alphas, m.box_bound()) < 1e-8);
    }

    #[test]
    fn nu_bounds_outlier_and_support_fractions() {
        for (n, seed) in [(20usize, 5u64), (100, 6)] {
            for nu in [0.05, 0.1, 0.2] {
                let ds = random_fixture(n, seed);
                let m = fit_svdd(&ds, KernelSpec::Rbf { gamma: 1.0 }, nu).unwrap();
                // tolerance keeps boundary SVs (on the sphere up to solver
                // precision) out of the outlier count
                let outliers = ds.iter_rows().filter(|x| m.score(x) > 10.0 * KKT_TOL).count();
                let slack = 2.0 / n as f64;
                assert!(
                    outliers as f64 / n as f64 <= nu + slack,
                    "n={n} nu={nu}: outlier fraction {}",
                    outliers as f64 / n as f64
                );
                assert!(
                    m.support_indices.len() as f64 / n as f64 >= nu - slack,
                    "n={n} nu={nu}: sv fraction {}",
                    m.support_indices.len() as f64 / n as f64
                );
            }
        }
    }

    #[test]
    fn ocsvm_and_svdd_rank_identically_for_rbf() {
        let ds = random_fixture(25, 7);
        let kernel = KernelSpec::Rbf { gamma: 0.8 };
        let svdd = fit_svdd(&ds, kernel.clone(), 0.1).unwrap();
        let ocsvm = fit_ocsvm(&ds, kernel, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let probes: Vec<DVector<f64>> = (0..40)
            .map(|_| DVector::from_fn(2, |_, _| rng.gen::<f64>() * 4.0 - 1.0))
            .collect();
        let s1: Vec<f64> = probes.iter().map(|x| svdd.score(x)).collect();
        let s2: Vec<f64> = probes.iter().map(|x| ocsvm.score(x)).collect();
        // Spearman = 1 exactly: identical orderings
        let order = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
            idx
        };
        assert_eq!(order(&s1), order(&s2));
    }

    #[test]
    fn hinge_values() {
        assert_relative_eq!(one_class_hinge(2.0, Label::Normal, 1.0).unwrap(), 1.0);
        assert_relative_eq!(one_class_hinge(-3.0, Label::Normal, 1.0).unwrap(), 0.0);
        assert_relative_eq!(
            one_class_hinge(-2.0, Label::Anomaly, 0.5).unwrap(),
            2.0 / 3.0
        );
        assert!(one_class_hinge(1.0, Label::Unlabeled, 0.5).is_err());
    }

    #[test]
    fn semisup_hinge_penalizes_inside_anomaly() {
        // labeled anomaly at the data center sits inside the sphere (s < 0)
        let mut ds = random_fixture(20, 9);
        ds.set_label(0, Label::Anomaly);
        let center = ds.matrix().row_mean().transpose();
        ds.set_row(0, &center);
        let before = fit_svdd_primal(&ds, 0.2, false, 0.0, 0).unwrap();
        let s_before = before.score(&ds.row(0));
        assert!(s_before < 0.0);
        assert!(one_class_hinge(s_before, Label::Anomaly, 0.2).unwrap() > 0.0);
        // relative to an identically trained unlabeled run, the label flag
        // pushes the anomaly score up
        let unlabeled = fit_svdd_primal(&ds, 0.2, false, 0.01, 500).unwrap();
        let labeled = fit_svdd_primal(&ds, 0.2, true, 0.01, 500).unwrap();
        assert!(labeled.score(&ds.row(0)) > unlabeled.score(&ds.row(0)));
    }

    #[test]
    fn grid_of_one_point_returns_it() {
        let train = random_fixture(15, 10);
        let mut val = random_fixture(10, 11);
        for i in 0..10 {
            val.set_label(i, if i < 2 { Label::Anomaly } else { Label::Normal });
        }
        let (nu, gamma, _) = select_nu_and_gamma(&train, &val, &[0.1], &[0.5]).unwrap();
        assert_eq!((nu, gamma), (0.1, 0.5));
    }

    #[test]
    fn separable_validation_reaches_perfect_auc() {
        // tight normal cluster, labeled anomalies far away
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let train_pts: Vec<Vec<f64>> = (0..40)
            .map(|_| vec![rng.gen::<f64>() * 0.5, rng.gen::<f64>() * 0.5])
            .collect();
        let train = Dataset::from_rows(&train_pts, vec![Label::Unlabeled; 40]).unwrap();
        let mut val_pts = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..8 {
            val_pts.push(vec![rng.gen::<f64>() * 0.5, rng.gen::<f64>() * 0.5]);
            labels.push(Label::Normal);
        }
        for _ in 0..3 {
            val_pts.push(vec![10.0 + rng.gen::<f64>(), 10.0 + rng.gen::<f64>()]);
            labels.push(Label::Anomaly);
        }
        let val = Dataset::from_rows(&val_pts, labels).unwrap();
        let (_, _, auc) = select_nu_and_gamma(
            &train,
            &val,
            &default_nu_grid(),
            &crate::prob::gamma_grid(2),
        )
        .unwrap();
        assert_relative_eq!(auc, 1.0);
    }

    #[test]
    fn kde_consistency_smoke() {
        // scores are finite and oriented: far point above near point
        let ds = random_fixture(20, 13);
        let m = fit_svdd(&ds, KernelSpec::Rbf { gamma: 1.0 }, 0.1).unwrap();
        let near = ds.row(0);
        let far = DVector::from_vec(vec![50.0, 50.0]);
        assert!(m.score(&far) > m.score(&near));
        let kde = fit_kde(&ds, KernelSpec::Rbf { gamma: 1.0 }).unwrap();
        assert!(kde.score(&far) > kde.score(&near));
    }
}
