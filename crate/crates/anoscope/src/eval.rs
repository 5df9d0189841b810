//! Threshold-free and threshold-dependent detection metrics.
//!
//! Scores are oriented larger = more anomalous; the anomaly class is the
//! "positive" class throughout.

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::threshold::{detect, DecisionThreshold};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// (score, truth) pairs; truth must be Normal or Anomaly.
#[derive(Debug, Clone)]
pub struct LabeledScores {
    pairs: Vec<(f64, Label)>,
}

impl LabeledScores {
    pub fn new(pairs: Vec<(f64, Label)>) -> Result<Self> {
        if pairs
            .iter()
            .any(|(s, l)| !s.is_finite() || *l == Label::Unlabeled)
        {
            return Err(Error::UnlabeledInput);
        }
        Ok(Self { pairs })
    }

    pub fn from_scores(scores: &[f64], labels: &[Label]) -> Result<Self> {
        Self::new(scores.iter().copied().zip(labels.iter().copied()).collect())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(f64, Label)] {
        &self.pairs
    }

    fn counts(&self) -> (usize, usize) {
        let anomalies = self.pairs.iter().filter(|(_, l)| *l == Label::Anomaly).count();
        (anomalies, self.pairs.len() - anomalies)
    }
}

/// AUROC via the Mann-Whitney statistic: the fraction of (anomaly, normal)
/// pairs where the anomaly scores higher, ties counted half. Computed with
/// average ranks, so it runs in O(n log n) and equals exhaustive pair
/// counting exactly.
pub fn auroc(ls: &LabeledScores) -> Result<f64> {
    let (n_anom, n_norm) = ls.counts();
    if n_anom == 0 || n_norm == 0 {
        return Err(Error::SingleClass);
    }
    let mut idx: Vec<usize> = (0..ls.len()).collect();
    idx.sort_by(|&a, &b| ls.pairs[a].0.partial_cmp(&ls.pairs[b].0).unwrap());
    // average ranks over tie groups (1-based)
    let mut rank_sum_anom = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && ls.pairs[idx[j]].0 == ls.pairs[idx[i]].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            if ls.pairs[k].1 == Label::Anomaly {
                rank_sum_anom += avg_rank;
            }
        }
        i = j;
    }
    let n_a = n_anom as f64;
    let u = rank_sum_anom - n_a * (n_a + 1.0) / 2.0;
    Ok(u / (n_a * n_norm as f64))
}

/// AUROC as the trapezoidal area under the ROC curve traced over distinct
/// score thresholds. Second algebraic route to the same quantity.
pub fn auroc_trapezoid(ls: &LabeledScores) -> Result<f64> {
    let (n_anom, n_norm) = ls.counts();
    if n_anom == 0 || n_norm == 0 {
        return Err(Error::SingleClass);
    }
    let mut sorted = ls.pairs.clone();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut area = 0.0;
    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut prev_tpr, mut prev_fpr) = (0.0, 0.0);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            if sorted[j].1 == Label::Anomaly {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        let tpr = tp as f64 / n_anom as f64;
        let fpr = fp as f64 / n_norm as f64;
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
        i = j;
    }
    Ok(area)
}

/// Average Precision over the PR curve traced at distinct thresholds
/// (descending score). Tie groups form a single PR step, which is the
/// documented tie-group averaging.
pub fn average_precision(ls: &LabeledScores) -> Result<f64> {
    let (n_anom, _) = ls.counts();
    if n_anom == 0 {
        return Err(Error::NoAnomalies);
    }
    let mut sorted = ls.pairs.clone();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut ap = 0.0;
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        let mut group_tp = 0usize;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            if sorted[j].1 == Label::Anomaly {
                group_tp += 1;
            }
            j += 1;
        }
        tp += group_tp;
        seen = j;
        if group_tp > 0 {
            let precision = tp as f64 / seen as f64;
            ap += precision * group_tp as f64 / n_anom as f64;
        }
        i = j;
    }
    let _ = seen;
    Ok(ap)
}

/// Among the top-k scores (stable descending order): anomalies / k.
pub fn precision_at_k(ls: &LabeledScores, k: usize) -> Result<f64> {
    let hits = top_k_anomalies(ls, k)?;
    Ok(hits as f64 / k as f64)
}

/// Among the top-k scores: anomalies found / total anomalies.
pub fn recall_at_k(ls: &LabeledScores, k: usize) -> Result<f64> {
    let (n_anom, _) = ls.counts();
    if n_anom == 0 {
        return Err(Error::NoAnomalies);
    }
    let hits = top_k_anomalies(ls, k)?;
    Ok(hits as f64 / n_anom as f64)
}

fn top_k_anomalies(ls: &LabeledScores, k: usize) -> Result<usize> {
    if k == 0 || k > ls.len() {
        return Err(Error::KOutOfRange { k, n: ls.len() });
    }
    let mut idx: Vec<usize> = (0..ls.len()).collect();
    // stable: ties keep input order
    idx.sort_by(|&a, &b| ls.pairs[b].0.partial_cmp(&ls.pairs[a].0).unwrap());
    Ok(idx[..k]
        .iter()
        .filter(|&&i| ls.pairs[i].1 == Label::Anomaly)
        .count())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub false_alarm_rate: f64,
    pub miss_rate: f64,
    pub counts: ConfusionCounts,
}

/// Type I / type II error rates at a fixed threshold, using the inclusive
/// flagging rule of [`detect`].
pub fn threshold_metrics(ls: &LabeledScores, threshold: &DecisionThreshold) -> Result<ThresholdMetrics> {
    let (n_anom, n_norm) = ls.counts();
    if n_anom == 0 || n_norm == 0 {
        return Err(Error::SingleClass);
    }
    let mut c = ConfusionCounts {
        true_positives: 0,
        false_positives: 0,
        true_negatives: 0,
        false_negatives: 0,
    };
    for &(s, truth) in &ls.pairs {
        let flagged = detect(s, threshold) == Label::Anomaly;
        match (truth, flagged) {
            (Label::Anomaly, true) => c.true_positives += 1,
            (Label::Anomaly, false) => c.false_negatives += 1,
            (Label::Normal, true) => c.false_positives += 1,
            (Label::Normal, false) => c.true_negatives += 1,
            (Label::Unlabeled, _) => unreachable!(),
        }
    }
    Ok(ThresholdMetrics {
        false_alarm_rate: c.false_positives as f64 / n_norm as f64,
        miss_rate: c.false_negatives as f64 / n_anom as f64,
        counts: c,
    })
}

/// Full evaluation summary for one model on one labeled test set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub auroc: f64,
    pub ap: f64,
    pub precision_at_k: BTreeMap<usize, f64>,
    pub recall_at_k: BTreeMap<usize, f64>,
    pub threshold_metrics: Option<ThresholdMetrics>,
}

impl EvalReport {
    pub fn compute(
        ls: &LabeledScores,
        ks: &[usize],
        threshold: Option<&DecisionThreshold>,
    ) -> Result<Self> {
        let mut p = BTreeMap::new();
        let mut r = BTreeMap::new();
        for &k in ks {
            p.insert(k, precision_at_k(ls, k)?);
            r.insert(k, recall_at_k(ls, k)?);
        }
        Ok(EvalReport {
            auroc: auroc(ls)?,
            ap: average_precision(ls)?,
            precision_at_k: p,
            recall_at_k: r,
            threshold_metrics: threshold.map(|t| threshold_metrics(ls, t)).transpose()?,
        })
    }

    /// key,value CSV lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("auroc,{}\n", self.auroc));
        out.push_str(&format!("ap,{}\n", self.ap));
        for (k, v) in &self.precision_at_k {
            out.push_str(&format!("precision_at_{k},{v}\n"));
        }
        for (k, v) in &self.recall_at_k {
            out.push_str(&format!("recall_at_{k},{v}\n"));
        }
        if let Some(t) = &self.threshold_metrics {
            out.push_str(&format!("false_alarm_rate,{}\n", t.false_alarm_rate));
            out.push_str(&format!("miss_rate,{}\n", t.miss_rate));
            out.push_str(&format!("true_positives,{}\n", t.counts.true_positives));
            out.push_str(&format!("false_positives,{}\n", t.counts.false_positives));
            out.push_str(&format!("true_negatives,{}\n", t.counts.true_negatives));
            out.push_str(&format!("false_negatives,{}\n", t.counts.false_negatives));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn ls(scores: &[f64], anomaly_mask: &[bool]) -> LabeledScores {
        LabeledScores::new(
            scores
                .iter()
                .zip(anomaly_mask)
                .map(|(&s, &a)| (s, if a { Label::Anomaly } else { Label::Normal }))
                .collect(),
        )
        .unwrap()
    }

    // Exhaustive O(n^2) pair-counting oracle.
    fn auroc_oracle(l: &LabeledScores) -> f64 {
        let anoms: Vec<f64> = l
            .pairs()
            .iter()
            .filter(|(_, t)| *t == Label::Anomaly)
            .map(|(s, _)| *s)
            .collect();
        let norms: Vec<f64> = l
            .pairs()
            .iter()
            .filter(|(_, t)| *t == Label::Normal)
            .map(|(s, _)| *s)
            .collect();
        let mut total = 0.0;
        for &a in &anoms {
            for &n in &norms {
                total += if a > n {
                    1.0
                } else if a == n {
                    0.5
                } else {
                    0.0
                };
            }
        }
        total / (anoms.len() * norms.len()) as f64
    }

    #[test]
    fn perfect_separation() {
        let l = ls(&[1.0, 2.0, 3.0, 4.0], &[false, false, true, true]);
        assert_relative_eq!(auroc(&l).unwrap(), 1.0);
    }

    #[test]
    fn interleaved_three_quarters() {
        let l = ls(&[1.0, 3.0, 2.0, 4.0], &[false, false, true, true]);
        assert_relative_eq!(auroc(&l).unwrap(), 0.75);
        assert_relative_eq!(auroc_oracle(&l), 0.75);
    }

    #[test]
    fn all_ties_give_half() {
        let l = ls(&[2.0, 2.0, 2.0, 2.0], &[false, false, true, true]);
        assert_relative_eq!(auroc(&l).unwrap(), 0.5);
        assert_relative_eq!(auroc_trapezoid(&l).unwrap(), 0.5);
    }

    #[test]
    fn rank_and_trapezoid_and_oracle_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = 40;
            let scores: Vec<f64> = (0..n).map(|_| (rng.gen::<f64>() * 8.0).round() / 4.0).collect();
            let mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
            if mask.iter().all(|&m| m) || !mask.iter().any(|&m| m) {
                continue;
            }
            let l = ls(&scores, &mask);
            let a = auroc(&l).unwrap();
            assert_relative_eq!(a, auroc_oracle(&l), epsilon = 1e-12);
            assert_relative_eq!(a, auroc_trapezoid(&l).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn auroc_invariant_under_monotone_transforms() {
        let scores = [0.3, -1.0, 2.5, 0.9, 0.3, 4.0, -0.7];
        let mask = [false, false, true, false, true, true, false];
        let base = auroc(&ls(&scores, &mask)).unwrap();
        let exp_scores: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        let aff_scores: Vec<f64> = scores.iter().map(|s| 3.0 * s + 7.0).collect();
        assert_relative_eq!(auroc(&ls(&exp_scores, &mask)).unwrap(), base, epsilon = 1e-12);
        assert_relative_eq!(auroc(&ls(&aff_scores, &mask)).unwrap(), base, epsilon = 1e-12);
    }

    #[test]
    fn auroc_symmetry_under_flip_and_negate() {
        let scores = [0.3, -1.0, 2.5, 0.9, 1.3, 4.0, -0.7];
        let mask = [false, false, true, false, true, true, false];
        let base = auroc(&ls(&scores, &mask)).unwrap();
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let flipped: Vec<bool> = mask.iter().map(|m| !m).collect();
        assert_relative_eq!(auroc(&ls(&neg, &flipped)).unwrap(), base, epsilon = 1e-12);
    }

    #[test]
    fn ap_a_n_a_ranking() {
        // ranking [A, N, A] by descending score -> (1 + 2/3) / 2 = 5/6
        let l = ls(&[3.0, 2.0, 1.0], &[true, false, true]);
        assert_relative_eq!(average_precision(&l).unwrap(), 5.0 / 6.0);
    }

    #[test]
    fn ap_perfect_is_one() {
        let l = ls(&[5.0, 4.0, 1.0, 0.5], &[true, true, false, false]);
        assert_relative_eq!(average_precision(&l).unwrap(), 1.0);
    }

    #[test]
    fn ap_inverted_perfect_matches_closed_form() {
        // anomalies ranked last among n items: AP = (1/A) * sum_{i=1..A} i / (N + i)
        let l = ls(&[4.0, 3.0, 2.0, 1.0], &[false, false, true, true]);
        let expected = (1.0 / 3.0 + 2.0 / 4.0) / 2.0;
        assert_relative_eq!(average_precision(&l).unwrap(), expected);
    }

    #[test]
    fn top_k_metrics() {
        // 10 points, anomalies at ranks 1, 3 in the top 3; 4 anomalies total
        let scores: Vec<f64> = (0..10).map(|i| 10.0 - i as f64).collect();
        let mask = [true, false, true, false, false, true, false, true, false, false];
        let l = ls(&scores, &mask);
        assert_relative_eq!(precision_at_k(&l, 3).unwrap(), 2.0 / 3.0);
        assert_relative_eq!(recall_at_k(&l, 3).unwrap(), 0.5);
        assert_relative_eq!(recall_at_k(&l, 10).unwrap(), 1.0);
        assert_relative_eq!(precision_at_k(&l, 1).unwrap(), 1.0);
        assert!(matches!(
            precision_at_k(&l, 11),
            Err(Error::KOutOfRange { .. })
        ));
    }

    #[test]
    fn threshold_rates() {
        let l = ls(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]);
        let low = DecisionThreshold { tau: 0.0, alpha: 0.0 };
        let m = threshold_metrics(&l, &low).unwrap();
        assert_relative_eq!(m.false_alarm_rate, 1.0);
        assert_relative_eq!(m.miss_rate, 0.0);
        let high = DecisionThreshold { tau: 2.0, alpha: 0.0 };
        let m = threshold_metrics(&l, &high).unwrap();
        assert_relative_eq!(m.false_alarm_rate, 0.0);
        assert_relative_eq!(m.miss_rate, 1.0);
        // planted split at tau = 0.5: one normal above, one anomaly below
        let l2 = ls(&[0.1, 0.6, 0.4, 0.9], &[false, false, true, true]);
        let mid = DecisionThreshold { tau: 0.5, alpha: 0.0 };
        let m = threshold_metrics(&l2, &mid).unwrap();
        assert_relative_eq!(m.false_alarm_rate, 0.5);
        assert_relative_eq!(m.miss_rate, 0.5);
        assert_eq!(m.counts.true_positives, 1);
        assert_eq!(m.counts.false_positives, 1);
    }

    #[test]
    fn single_class_rejected() {
        let l = ls(&[1.0, 2.0], &[true, true]);
        assert!(matches!(auroc(&l), Err(Error::SingleClass)));
    }
}
