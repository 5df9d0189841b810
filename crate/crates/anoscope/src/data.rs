//! Synthetic data generation, contamination injection, robust scaling, and
//! stratified splitting.

use crate::dataset::{Dataset, Label};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Configuration of the two-arc "big moon, small moon" toy set: a large
/// semicircular arc over angles [0, pi] centered at the origin and a small
/// arc over [pi, 2pi] centered at `small_center`, each with isotropic
/// Gaussian jitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoMoonsConfig {
    pub n_train: usize,
    pub big_radius: f64,
    pub small_radius: f64,
    pub small_center: [f64; 2],
    pub noise_sigma_big: f64,
    pub noise_sigma_small: f64,
    pub seed: u64,
}

impl Default for TwoMoonsConfig {
    fn default() -> Self {
        TwoMoonsConfig {
            n_train: 1000,
            big_radius: 2.0,
            small_radius: 0.6,
            small_center: [1.5, 0.6],
            noise_sigma_big: 0.2,
            noise_sigma_small: 0.06,
            seed: 0,
        }
    }
}

impl TwoMoonsConfig {
    fn validate(&self) -> Result<()> {
        if self.n_train == 0
            || self.big_radius <= 0.0
            || self.small_radius <= 0.0
            || self.noise_sigma_big < 0.0
            || self.noise_sigma_small < 0.0
        {
            return Err(Error::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }
}

fn gaussian_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // Box-Muller; two independent standard normals per call.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    (r * (2.0 * PI * u2).cos(), r * (2.0 * PI * u2).sin())
}

/// Generates `n_train` unlabeled 2-D points on the two noisy arcs.
/// Deterministic under a fixed seed.
pub fn gen_two_moons(cfg: &TwoMoonsConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_big = cfg.n_train / 2 + cfg.n_train % 2;
    let mut rows = DMatrix::zeros(cfg.n_train, 2);
    for i in 0..cfg.n_train {
        let (center, radius, sigma, theta) = if i < n_big {
            let theta = rng.gen_range(0.0..PI);
            ([0.0, 0.0], cfg.big_radius, cfg.noise_sigma_big, theta)
        } else {
            let theta = rng.gen_range(PI..2.0 * PI);
            (
                cfg.small_center,
                cfg.small_radius,
                cfg.noise_sigma_small,
                theta,
            )
        };
        let (g1, g2) = gaussian_pair(&mut rng);
        rows[(i, 0)] = center[0] + radius * theta.cos() + sigma * g1;
        rows[(i, 1)] = center[1] + radius * theta.sin() + sigma * g2;
    }
    Dataset::unlabeled(rows)
}

/// Axis-aligned sampling box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len()
            || lower.is_empty()
            || lower.iter().zip(&upper).any(|(l, u)| l >= u)
        {
            return Err(Error::DegenerateBox);
        }
        Ok(BoundingBox { lower, upper })
    }

    /// Data bounding box expanded by `margin` on every side.
    pub fn of(data: &Dataset, margin: f64) -> Self {
        let d = data.dim();
        let mut lower = vec![f64::INFINITY; d];
        let mut upper = vec![f64::NEG_INFINITY; d];
        for i in 0..data.n() {
            for j in 0..d {
                let v = data.matrix()[(i, j)];
                lower[j] = lower[j].min(v);
                upper[j] = upper[j].max(v);
            }
        }
        for j in 0..d {
            lower[j] -= margin;
            upper[j] += margin;
        }
        BoundingBox { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        (0..self.dim()).all(|j| x[j] >= self.lower[j] && x[j] <= self.upper[j])
    }
}

/// `m` i.i.d. uniform draws over the box, labeled Anomaly.
pub fn sample_uniform_anomalies(bounds: &BoundingBox, m: usize, seed: u64) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::InvalidConfig("m must be >= 1".into()));
    }
    let d = bounds.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = DMatrix::from_fn(m, d, |_, j| rng.gen_range(bounds.lower[j]..bounds.upper[j]));
    Dataset::new(rows, vec![Label::Anomaly; m])
}

/// Contamination model: each row is independently replaced with probability
/// `eta` by a draw from the anomaly sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub eta: f64,
    pub bounds: BoundingBox,
}

impl ContaminationSpec {
    pub fn new(eta: f64, bounds: BoundingBox) -> Result<Self> {
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::InvalidConfig(format!("eta {eta} outside [0, 1)")));
        }
        Ok(ContaminationSpec { eta, bounds })
    }
}

/// Replaced rows keep the Unlabeled label: the contamination goes unnoticed
/// by construction.
pub fn contaminate(normal: &Dataset, spec: &ContaminationSpec, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = normal.clone();
    for i in 0..out.n() {
        if rng.gen::<f64>() < spec.eta {
            let draw = DVector::from_fn(out.dim(), |j, _| {
                rng.gen_range(spec.bounds.lower[j]..spec.bounds.upper[j])
            });
            out.set_row(i, &draw);
        }
    }
    out
}

/// Type-7 (linear interpolation) quantile of already-sorted values.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Per-feature median/IQR scaler fitted on training data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustScaler {
    pub medians: Vec<f64>,
    pub iqrs: Vec<f64>,
}

pub fn fit_robust_scaler(train: &Dataset) -> Result<RobustScaler> {
    if train.n() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    let d = train.dim();
    let mut medians = Vec::with_capacity(d);
    let mut iqrs = Vec::with_capacity(d);
    for j in 0..d {
        let mut col: Vec<f64> = (0..train.n()).map(|i| train.matrix()[(i, j)]).collect();
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        medians.push(quantile_sorted(&col, 0.5));
        iqrs.push(quantile_sorted(&col, 0.75) - quantile_sorted(&col, 0.25));
    }
    Ok(RobustScaler { medians, iqrs })
}

/// Maps column j to (x_j - median_j) / iqr_j. Zero-IQR columns are centered
/// only.
pub fn apply_scaler(scaler: &RobustScaler, data: &Dataset) -> Result<Dataset> {
    if data.dim() != scaler.medians.len() {
        return Err(Error::DimensionMismatch {
            expected: scaler.medians.len(),
            got: data.dim(),
        });
    }
    let rows = DMatrix::from_fn(data.n(), data.dim(), |i, j| {
        let centered = data.matrix()[(i, j)] - scaler.medians[j];
        if scaler.iqrs[j] > 0.0 {
            centered / scaler.iqrs[j]
        } else {
            centered
        }
    });
    let mut out = Dataset::new(rows, data.labels().to_vec())?;
    out.feature_names = data.feature_names.clone();
    Ok(out)
}

/// Random split preserving the anomaly ratio per stratum. Fractions must be
/// non-negative and sum to 1.
pub fn stratified_split(
    data: &Dataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    let f = [fractions.0, fractions.1, fractions.2];
    if f.iter().any(|&x| x < 0.0) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::FractionsInvalid(f));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    // strata: anomalies vs everything else
    for stratum in [Label::Anomaly, Label::Normal, Label::Unlabeled] {
        let mut idx: Vec<usize> = (0..data.n())
            .filter(|&i| data.labels()[i] == stratum)
            .collect();
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let n = idx.len();
        let n_train = (f[0] * n as f64).round() as usize;
        let n_val = (f[1] * n as f64).round() as usize;
        let n_val = n_val.min(n - n_train.min(n));
        let n_train = n_train.min(n);
        train.extend_from_slice(&idx[..n_train]);
        val.extend_from_slice(&idx[n_train..n_train + n_val]);
        test.extend_from_slice(&idx[n_train + n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok((data.select(&train), data.select(&val), data.select(&test)))
}
