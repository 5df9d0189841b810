//! Model persistence: fit -> save -> load -> score reproduces every score
//! bit-exactly, so downstream thresholds stay valid across processes.

use anoscope::checkpoint::{load_model, save_model};
use anoscope::data::{gen_two_moons, TwoMoonsConfig};
use anoscope::{
    build_detector, FeatureMap, Loss, ModelFamily, ModelingDimensions, Regularization, Result,
};

fn main() -> Result<()> {
    let train = gen_two_moons(&TwoMoonsConfig {
        n_train: 150,
        seed: 13,
        ..Default::default()
    })?;
    let model = build_detector(ModelingDimensions {
        loss: Loss::NegLogLikelihood,
        model_family: ModelFamily::Mixture { k: 3 },
        feature_map: FeatureMap::RawInput,
        regularization: Regularization::default(),
    })?
    .fit(&train)?;

    let dir = std::env::temp_dir().join("anoscope_checkpoint_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("gmm.json");
    save_model(&path, &model)?;
    let restored = load_model(&path)?;

    let before = model.score_dataset(&train);
    let after = restored.score_dataset(&train);
    let exact = before
        .iter()
        .zip(&after)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    println!("saved {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());
    println!("bit-exact scores after reload: {exact}");
    Ok(())
}
