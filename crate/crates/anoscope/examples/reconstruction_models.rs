//! Reconstruction detectors: PCA, kernel PCA, and vector quantization score
//! by squared reconstruction error, zero on the learned manifold.

use anoscope::bench::{toy_split, BenchConfig};
use anoscope::eval::{auroc, LabeledScores};
use anoscope::recon::{fit_kpca, fit_pca, fit_vq, select_kpca_gamma, VqNorm};
use anoscope::{KernelSpec, Result};

fn main() -> Result<()> {
    let (train, test) = toy_split(&BenchConfig {
        seed: 2,
        n_train: 400,
        n_test_normal: 200,
        n_test_anomaly: 40,
    })?;

    let pca = fit_pca(&train, 0.9)?;
    let gamma = select_kpca_gamma(&train)?;
    let kpca = fit_kpca(&train, KernelSpec::Rbf { gamma }, 0.9)?;
    let vq = fit_vq(&train, 16, VqNorm::L2, 2)?;

    let report = |name: &str, scores: Vec<f64>| -> Result<()> {
        let ls = LabeledScores::from_scores(&scores, test.labels())?;
        println!("{name:6} auroc {:.4}", auroc(&ls)?);
        Ok(())
    };
    // the linear subspace cannot bend around the moons; the kernel map can
    report("pca", test.iter_rows().map(|x| pca.score(&x)).collect())?;
    report("kpca", test.iter_rows().map(|x| kpca.score(&x)).collect())?;
    report("vq", test.iter_rows().map(|x| vq.score(&x)).collect())?;
    Ok(())
}
