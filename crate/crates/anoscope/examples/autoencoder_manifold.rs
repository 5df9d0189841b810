//! Autoencoder anomaly detection: a bottleneck network trained by exact
//! backpropagation, with holdout-based early stopping; scores are squared
//! reconstruction errors.

use anoscope::bench::{toy_split, BenchConfig};
use anoscope::deep::{fit_autoencoder, Activation, MlpSpec, Optimizer};
use anoscope::eval::{auroc, LabeledScores};
use anoscope::Result;

fn main() -> Result<()> {
    let (train, test) = toy_split(&BenchConfig {
        seed: 3,
        n_train: 400,
        n_test_normal: 200,
        n_test_anomaly: 40,
    })?;
    let idx_fit: Vec<usize> = (0..320).collect();
    let idx_hold: Vec<usize> = (320..400).collect();

    // encoder dims D -> ... -> d; the decoder mirrors them back to D
    let spec = MlpSpec::new(vec![2, 64, 32, 1], Activation::Elu, true, 3)?;
    let opt = Optimizer::adam(0.01, 32, 120, 1e-4);
    let model = fit_autoencoder(&train.select(&idx_fit), &spec, &opt, &train.select(&idx_hold))?;

    println!(
        "best epoch {} of {} (holdout error {:.5})",
        model.best_epoch,
        model.holdout_trace.len(),
        model.holdout_trace[model.best_epoch]
    );

    let scores: Vec<f64> = test.iter_rows().map(|x| model.score(&x)).collect();
    let ls = LabeledScores::from_scores(&scores, test.labels())?;
    println!("autoencoder auroc {:.4}", auroc(&ls)?);

    let x = test.row(0);
    let z = model.encode(&x)?;
    println!("encode {:?} -> bottleneck {:?}", x.as_slice(), z.as_slice());
    Ok(())
}
