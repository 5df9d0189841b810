//! Empirical threshold calibration and binary detection.
//!
//! Scores follow the global orientation: larger = more anomalous. The
//! threshold tau_alpha is the (1 - alpha)-quantile of a calibration score
//! sample, so flagging `score >= tau` keeps the empirical false-alarm
//! fraction among strictly greater scores at most alpha.

use crate::dataset::Label;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionThreshold {
    pub tau: f64,
    pub alpha: f64,
}

/// Picks the smallest score value t in the sample with
/// #{s_i <= t}/n >= 1 - alpha. Degenerate ends resolve to sample extremes:
/// alpha = 0 gives the maximum, alpha = 1 the minimum.
pub fn calibrate_threshold(scores: &[f64], alpha: f64) -> Result<DecisionThreshold> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let tau = sorted
        .iter()
        .copied()
        .find(|&t| {
            let frac = sorted.iter().filter(|&&s| s <= t).count() as f64 / n;
            frac >= 1.0 - alpha
        })
        .unwrap_or(sorted[sorted.len() - 1]);
    Ok(DecisionThreshold { tau, alpha })
}

/// Boundary inclusive: score >= tau is flagged as anomalous.
pub fn detect(score: f64, threshold: &DecisionThreshold) -> Label {
    if score >= threshold.tau {
        Label::Anomaly
    } else {
        Label::Normal
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: enumerate every cut point and pick the smallest
    // admissible one.
    fn oracle_tau(scores: &[f64], alpha: f64) -> f64 {
        let n = scores.len() as f64;
        let mut cuts: Vec<f64> = scores.to_vec();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &t in &cuts {
            let frac = scores.iter().filter(|&&s| s <= t).count() as f64 / n;
            if frac >= 1.0 - alpha {
                return t;
            }
        }
        *cuts.last().unwrap()
    }

    #[test]
    fn quarter_alpha_on_four_scores() {
        let scores = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(oracle_tau(&scores, 0.25), 0.3);
        let t = calibrate_threshold(&scores, 0.25).unwrap();
        assert_eq!(t.tau, 0.3);
    }

    #[test]
    fn alpha_zero_is_max() {
        let t = calibrate_threshold(&[0.1, 0.2, 0.3, 0.4], 0.0).unwrap();
        assert_eq!(t.tau, 0.4);
    }

    #[test]
    fn alpha_one_is_min() {
        let t = calibrate_threshold(&[0.1, 0.2, 0.3, 0.4], 1.0).unwrap();
        assert_eq!(t.tau, 0.1);
    }

    #[test]
    fn ties_collapse_to_one_cut() {
        let scores = [5.0, 5.0, 5.0];
        assert_eq!(oracle_tau(&scores, 0.5), 5.0);
        let t = calibrate_threshold(&scores, 0.5).unwrap();
        assert_eq!(t.tau, 5.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(calibrate_threshold(&[], 0.5), Err(Error::EmptyScores)));
        assert!(matches!(
            calibrate_threshold(&[1.0], 1.5),
            Err(Error::AlphaOutOfRange(_))
        ));
    }

    #[test]
    fn detect_boundary_inclusive() {
        let t = DecisionThreshold { tau: 0.5, alpha: 0.1 };
        assert_eq!(detect(1.0, &t), Label::Anomaly);
        assert_eq!(detect(0.5, &t), Label::Anomaly);
        assert_eq!(detect(0.49, &t), Label::Normal);
    }

    #[test]
    fn at_most_alpha_n_strictly_above_tau() {
        // calibrate then detect over the same sample: at most ceil(alpha n)
        // scores lie strictly above tau.
        let scores: Vec<f64> = (0..57).map(|i| (i as f64 * 0.37).sin()).collect();
        for &alpha in &[0.0, 0.05, 0.25, 0.5, 0.9, 1.0] {
            let t = calibrate_threshold(&scores, alpha).unwrap();
            let above = scores.iter().filter(|&&s| s > t.tau).count();
            let budget = (alpha * scores.len() as f64).ceil() as usize;
            assert!(above <= budget, "alpha={alpha}: {above} > {budget}");
        }
    }
}
