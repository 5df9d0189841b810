//! Threshold-free evaluation: AUROC (tie-aware pair counting), average
//! precision, precision/recall at k, and error rates at a calibrated
//! threshold, bundled into one report.

use anoscope::eval::{auroc, auroc_trapezoid, average_precision, EvalReport, LabeledScores};
use anoscope::{calibrate_threshold, Label, Result};

fn main() -> Result<()> {
    let scores = vec![9.0, 8.0, 7.5, 6.0, 5.0, 5.0, 4.0, 3.0, 2.0, 1.0];
    let labels = vec![
        Label::Anomaly,
        Label::Anomaly,
        Label::Normal,
        Label::Anomaly,
        Label::Normal,
        Label::Anomaly, // tied score with the row above
        Label::Normal,
        Label::Normal,
        Label::Normal,
        Label::Normal,
    ];
    let ls = LabeledScores::from_scores(&scores, &labels)?;

    println!("auroc (pair counting) {:.6}", auroc(&ls)?);
    println!("auroc (trapezoid)     {:.6}", auroc_trapezoid(&ls)?);
    println!("average precision     {:.6}", average_precision(&ls)?);

    let threshold = calibrate_threshold(&scores, 0.3)?;
    let report = EvalReport::compute(&ls, &[1, 3, 5], Some(&threshold))?;
    print!("{}", report.to_csv());
    Ok(())
}
