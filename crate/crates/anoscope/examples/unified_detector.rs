//! The core contract: every detector is a (loss, model family, feature map)
//! triple, fitted through one entry point and scored on one orientation
//! (larger = more anomalous).

use anoscope::data::{gen_two_moons, TwoMoonsConfig};
use anoscope::{
    build_detector, calibrate_threshold, detect, Dataset, FeatureMap, KernelSpec, Label, Loss,
    ModelFamily, ModelingDimensions, Regularization, Result,
};

fn main() -> Result<()> {
    let train = gen_two_moons(&TwoMoonsConfig {
        n_train: 400,
        seed: 7,
        ..Default::default()
    })?;

    let dims = ModelingDimensions {
        loss: Loss::NegLogLikelihood,
        model_family: ModelFamily::KernelDensity,
        feature_map: FeatureMap::Kernel(KernelSpec::Rbf { gamma: 8.0 }),
        regularization: Regularization::default(),
    };
    let model = build_detector(dims)?.fit(&train)?;

    // tau is the empirical (1 - alpha)-quantile of the training scores
    let train_scores = model.score_dataset(&train);
    let threshold = calibrate_threshold(&train_scores, 0.05)?;
    println!("tau = {:.4} at alpha = {}", threshold.tau, threshold.alpha);

    let probes = Dataset::from_rows(
        &[vec![1.5, 0.6], vec![0.0, 2.0], vec![4.0, 4.0]],
        vec![Label::Unlabeled; 3],
    )?;
    for (i, x) in probes.iter_rows().enumerate() {
        let s = model.score(&x);
        println!("probe {i}: score {:8.4} -> {:?}", s, detect(s, &threshold));
    }
    Ok(())
}
