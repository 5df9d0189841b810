//! Density-based detectors: Gaussian, mixture, KDE, and probabilistic PCA
//! all score by negative log-likelihood, so they plug into the same
//! evaluation without any rescaling.

use anoscope::bench::{toy_split, BenchConfig};
use anoscope::eval::{auroc, LabeledScores};
use anoscope::prob::{fit_gaussian, fit_gmm, fit_kde, fit_ppca, select_bandwidth};
use anoscope::{KernelSpec, Result};

fn main() -> Result<()> {
    let (train, test) = toy_split(&BenchConfig {
        seed: 1,
        n_train: 500,
        n_test_normal: 250,
        n_test_anomaly: 50,
    })?;

    // hold out a slice of the training sample for bandwidth selection
    let idx_fit: Vec<usize> = (0..400).collect();
    let idx_val: Vec<usize> = (400..500).collect();
    let gamma = select_bandwidth(&train.select(&idx_fit), &train.select(&idx_val))?;
    println!("selected KDE gamma = {gamma}");

    let gaussian = fit_gaussian(&train)?;
    let gmm = fit_gmm(&train, 4, 1, 200, 1e-6)?;
    let kde = fit_kde(&train, KernelSpec::Rbf { gamma })?;
    let ppca = fit_ppca(&train, 1)?;

    let report = |name: &str, scores: Vec<f64>| -> Result<()> {
        let ls = LabeledScores::from_scores(&scores, test.labels())?;
        println!("{name:10} auroc {:.4}", auroc(&ls)?);
        Ok(())
    };
    report("gaussian", test.iter_rows().map(|x| gaussian.score(&x)).collect())?;
    report("gmm", test.iter_rows().map(|x| gmm.score(&x)).collect())?;
    report("kde", test.iter_rows().map(|x| kde.score(&x)).collect())?;
    report("ppca", test.iter_rows().map(|x| ppca.score(&x)).collect())?;
    Ok(())
}
