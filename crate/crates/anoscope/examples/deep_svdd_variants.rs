//! Deep SVDD: a bias-free network maps data near a frozen center; distance
//! to the center is the anomaly score. Shows the one-class, soft-boundary,
//! and semi-supervised variants plus the collapse guard.

use anoscope::bench::{toy_split, BenchConfig};
use anoscope::deep::{fit_deep_svdd, Activation, DeepSvddVariant, MlpSpec, Optimizer};
use anoscope::eval::{auroc, LabeledScores};
use anoscope::{Dataset, Error, Label, Result};

fn main() -> Result<()> {
    let (train, test) = toy_split(&BenchConfig {
        seed: 4,
        n_train: 300,
        n_test_normal: 150,
        n_test_anomaly: 30,
    })?;
    let spec = MlpSpec::new(vec![2, 128, 64, 16], Activation::Elu, false, 4)?;
    let opt = Optimizer::adam(0.0005, 32, 200, 1e-4);

    for variant in [
        DeepSvddVariant::OneClass,
        DeepSvddVariant::SoftBoundary { nu: 0.1, r2: 0.0 },
    ] {
        let model = fit_deep_svdd(&train, &spec, &opt, variant, None)?;
        let scores: Vec<f64> = test.iter_rows().map(|x| model.score(&x)).collect();
        let ls = LabeledScores::from_scores(&scores, test.labels())?;
        println!("{:?}: auroc {:.4}", model.variant, auroc(&ls)?);
    }

    // the semi-supervised variant pushes a few labeled anomalies away
    let labeled = Dataset::from_rows(
        &[vec![4.0, 4.0], vec![-3.0, 3.5], vec![3.5, -3.0]],
        vec![Label::Anomaly; 3],
    )?;
    let sad = fit_deep_svdd(&train, &spec, &opt, DeepSvddVariant::Sad { eta: 1.0 }, Some(&labeled))?;
    println!(
        "sad: labeled-anomaly distance grew {:.3} -> {:.3}",
        sad.labeled_anomaly_trace.first().unwrap(),
        sad.labeled_anomaly_trace.last().unwrap()
    );

    // a designed degenerate run: a huge full-batch step kills every ReLU
    // unit, the embedding goes constant, and the variance guard fires
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let blob: Vec<Vec<f64>> = (0..30)
        .map(|_| vec![6.0 + rng.gen::<f64>() - 0.5, 0.5 + rng.gen::<f64>() - 0.5])
        .collect();
    let blob = Dataset::from_rows(&blob, vec![Label::Unlabeled; 30])?;
    let bad_spec = MlpSpec::new(vec![2, 8, 2], Activation::Relu, false, 7)?;
    let bad_opt = Optimizer::sgd(5.0, 30, 200, 0.0);
    match fit_deep_svdd(&blob, &bad_spec, &bad_opt, DeepSvddVariant::OneClass, None) {
        Err(Error::CollapseDetected { epoch, variance_ratio }) => {
            println!("collapse guard fired at epoch {epoch} (variance ratio {variance_ratio:.2e})")
        }
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}
