//! The unified detector contract: declare a (loss, model family, feature
//! map) triple and dispatch to the matching trainer. Every fitted model
//! scores with the same orientation: larger = more anomalous.

use crate::dataset::{Dataset, Label};
use crate::deep::{
    fit_autoencoder, fit_deep_svdd, AeModel, DeepSvddModel, DeepSvddVariant, MlpSpec, Optimizer,
};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::oneclass::{
    fit_mve, fit_ocsvm, fit_svdd, fit_svdd_primal, InputSvddModel, MveModel, OcsvmModel, SvddModel,
};
use crate::prob::{fit_gaussian, fit_gmm, fit_kde, fit_ppca, GaussianModel, GmmModel, KdeModel, PpcaModel};
use crate::recon::{fit_kpca, fit_pca, fit_vq, KpcaModel, PcaModel, VqModel, VqNorm};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Loss {
    NegLogLikelihood,
    Hinge,
    ShiftedHinge(f64),
    LinearOneClass,
    SemiSupExponent,
    SquaredError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelFamily {
    Gaussian,
    Mixture { k: usize },
    KernelDensity,
    ProbabilisticPca { d: usize },
    Ellipsoid,
    Hypersphere,
    Halfspace,
    Subspace { variance_fraction: f64 },
    Prototypes { k: usize, norm: VqNorm },
    Autoencoder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureMap {
    RawInput,
    Kernel(KernelSpec),
    Neural(MlpSpec),
}

impl FeatureMap {
    fn name(&self) -> &'static str {
        match self {
            FeatureMap::RawInput => "raw input",
            FeatureMap::Kernel(_) => "kernel",
            FeatureMap::Neural(_) => "neural",
        }
    }
}

/// Knobs that live outside the (loss, family, feature map) triple.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Regularization {
    pub seed: u64,
    /// MVE: fraction of points the ellipsoid must cover.
    pub support_fraction: f64,
    /// MVE: expected anomaly fraction, sets the boundary quantile.
    pub contamination: f64,
    /// Neural trainers; None picks a conservative default.
    pub optimizer: Option<Optimizer>,
    /// Fraction of the training set held out for autoencoder early stopping.
    pub holdout_fraction: f64,
    /// Labeled-term weight for the semi-supervised exponent loss.
    pub sad_eta: f64,
    pub em_max_iter: usize,
    pub em_tol: f64,
    /// Input-space hinge trainers (primal SVDD).
    pub sgd_lr: f64,
    pub sgd_epochs: usize,
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization {
            seed: 0,
            support_fraction: 0.9,
            contamination: 0.01,
            optimizer: None,
            holdout_fraction: 0.2,
            sad_eta: 1.0,
            em_max_iter: 200,
            em_tol: 1e-6,
            sgd_lr: 0.05,
            sgd_epochs: 200,
        }
    }
}

/// The declared modeling dimensions D1-D4; inference (D5) is fixed to
/// frequentist point estimation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelingDimensions {
    pub loss: Loss,
    pub model_family: ModelFamily,
    pub feature_map: FeatureMap,
    pub regularization: Regularization,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum DetectorModel {
    Gaussian(GaussianModel),
    Gmm(GmmModel),
    Kde(KdeModel),
    Ppca(PpcaModel),
    Mve(MveModel),
    Svdd(SvddModel),
    Ocsvm(OcsvmModel),
    InputSvdd(InputSvddModel),
    Pca(PcaModel),
    Kpca(KpcaModel),
    Vq(VqModel),
    Ae(AeModel),
    DeepSvdd(DeepSvddModel),
}

impl DetectorModel {
    pub fn family_name(&self) -> &'static str {
        match self {
            DetectorModel::Gaussian(_) => "gaussian",
            DetectorModel::Gmm(_) => "gmm",
            DetectorModel::Kde(_) => "kde",
            DetectorModel::Ppca(_) => "ppca",
            DetectorModel::Mve(_) => "mve",
            DetectorModel::Svdd(_) => "svdd",
            DetectorModel::Ocsvm(_) => "ocsvm",
            DetectorModel::InputSvdd(_) => "input-svdd",
            DetectorModel::Pca(_) => "pca",
            DetectorModel::Kpca(_) => "kpca",
            DetectorModel::Vq(_) => "vq",
            DetectorModel::Ae(_) => "autoencoder",
            DetectorModel::DeepSvdd(_) => "deep-svdd",
        }
    }

    /// Anomaly score, larger = more anomalous.
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        match self {
            DetectorModel::Gaussian(m) => m.score(x),
            DetectorModel::Gmm(m) => m.score(x),
            DetectorModel::Kde(m) => m.score(x),
            DetectorModel::Ppca(m) => m.score(x),
            DetectorModel::Mve(m) => m.score(x),
            DetectorModel::Svdd(m) => m.score(x),
            DetectorModel::Ocsvm(m) => m.score(x),
            DetectorModel::InputSvdd(m) => m.score(x),
            DetectorModel::Pca(m) => m.score(x),
            DetectorModel::Kpca(m) => m.score(x),
            DetectorModel::Vq(m) => m.score(x),
            DetectorModel::Ae(m) => m.score(x),
            DetectorModel::DeepSvdd(m) => m.score(x),
        }
    }

    pub fn score_dataset(&self, data: &Dataset) -> Vec<f64> {
        data.iter_rows().map(|x| self.score(&x)).collect()
    }

    /// Rebuilds non-serialized caches after deserialization.
    pub fn refresh_cache(&mut self) -> Result<()> {
        match self {
            DetectorModel::Gmm(m) => m.refresh_cache(),
            DetectorModel::Ppca(m) => m.refresh_cache(),
            DetectorModel::Mve(m) => m.refresh_cache(),
            _ => Ok(()),
        }
    }
}

/// Membership in the model's intrinsic nu-level set: Normal iff the signed
/// decision value is negative. Only boundary-carrying models (SVDD, OC-SVM,
/// MVE and kin) support this; density and reconstruction models need
/// `calibrate_threshold`.
pub fn level_set_membership(model: &DetectorModel, x: &DVector<f64>) -> Result<Label> {
    let signed = match model {
        DetectorModel::Svdd(m) => m.score(x),
        DetectorModel::Ocsvm(m) => m.score(x),
        DetectorModel::InputSvdd(m) => m.score(x),
        DetectorModel::Mve(m) => m.score(x),
        DetectorModel::DeepSvdd(m)
            if matches!(m.variant, DeepSvddVariant::SoftBoundary { .. }) =>
        {
            m.score(x)
        }
        other => return Err(Error::ModelHasNoIntrinsicBoundary(other.family_name())),
    };
    Ok(if signed < 0.0 { Label::Normal } else { Label::Anomaly })
}

#[derive(Debug)]
pub struct DetectorBuilder {
    dims: ModelingDimensions,
}

/// Validates the modeling triple against the supported rows and returns a
/// builder whose `fit` dispatches to the matching trainer.
pub fn build_detector(dims: ModelingDimensions) -> Result<DetectorBuilder> {
    use FeatureMap as F;
    use Loss as L;
    use ModelFamily as M;
    let supported = matches!(
        (&dims.loss, &dims.model_family, &dims.feature_map),
        (L::NegLogLikelihood, M::Gaussian, F::RawInput)
            | (L::NegLogLikelihood, M::Mixture { .. }, F::RawInput)
            | (L::NegLogLikelihood, M::KernelDensity, F::Kernel(_))
            | (L::NegLogLikelihood, M::ProbabilisticPca { .. }, F::RawInput)
            | (L::Hinge, M::Ellipsoid, F::RawInput)
            | (L::ShiftedHinge(_), M::Hypersphere, F::Kernel(_))
            | (L::ShiftedHinge(_), M::Hypersphere, F::RawInput)
            | (L::ShiftedHinge(_), M::Hypersphere, F::Neural(_))
            | (L::ShiftedHinge(_), M::Halfspace, F::Kernel(_))
            | (L::LinearOneClass, M::Hypersphere, F::Neural(_))
            | (L::SemiSupExponent, M::Hypersphere, F::Neural(_))
            | (L::SquaredError, M::Subspace { .. }, F::RawInput)
            | (L::SquaredError, M::Subspace { .. }, F::Kernel(_))
            | (L::SquaredError, M::Prototypes { .. }, F::RawInput)
            | (L::SquaredError, M::Autoencoder, F::Neural(_))
    );
    if !supported {
        return Err(Error::UnsupportedCombination(format!(
            "loss {:?} + family {:?} + feature map {}",
            dims.loss,
            dims.model_family,
            dims.feature_map.name()
        )));
    }
    Ok(DetectorBuilder { dims })
}

fn default_optimizer() -> Optimizer {
    Optimizer::adam(0.01, 16, 150, 1e-4)
}

impl DetectorBuilder {
    pub fn dims(&self) -> &ModelingDimensions {
        &self.dims
    }

    pub fn fit(&self, train: &Dataset) -> Result<DetectorModel> {
        use FeatureMap as F;
        use Loss as L;
        use ModelFamily as M;
        if train.n() == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        let reg = &self.dims.regularization;
        let opt = reg.optimizer.unwrap_or_else(default_optimizer);
        let model = match (&self.dims.loss, &self.dims.model_family, &self.dims.feature_map) {
            (L::NegLogLikelihood, M::Gaussian, F::RawInput) => {
                DetectorModel::Gaussian(fit_gaussian(train)?)
            }
            (L::NegLogLikelihood, M::Mixture { k }, F::RawInput) => DetectorModel::Gmm(fit_gmm(
                train,
                *k,
                reg.seed,
                reg.em_max_iter,
                reg.em_tol,
            )?),
            (L::NegLogLikelihood, M::KernelDensity, F::Kernel(kernel)) => {
                DetectorModel::Kde(fit_kde(train, kernel.clone())?)
            }
            (L::NegLogLikelihood, M::ProbabilisticPca { d }, F::RawInput) => {
                DetectorModel::Ppca(fit_ppca(train, *d)?)
            }
            (L::Hinge, M::Ellipsoid, F::RawInput) => DetectorModel::Mve(fit_mve(
                train,
                reg.support_fraction,
                reg.contamination,
                reg.seed,
            )?),
            (L::ShiftedHinge(nu), M::Hypersphere, F::Kernel(kernel)) => {
                DetectorModel::Svdd(fit_svdd(train, kernel.clone(), *nu)?)
            }
            (L::ShiftedHinge(nu), M::Hypersphere, F::RawInput) => {
                let use_labels = train.labels().iter().any(|&l| l != Label::Unlabeled);
                DetectorModel::InputSvdd(fit_svdd_primal(
                    train,
                    *nu,
                    use_labels,
                    reg.sgd_lr,
                    reg.sgd_epochs,
                )?)
            }
            (L::ShiftedHinge(nu), M::Halfspace, F::Kernel(kernel)) => {
                DetectorModel::Ocsvm(fit_ocsvm(train, kernel.clone(), *nu)?)
            }
            (L::ShiftedHinge(nu), M::Hypersphere, F::Neural(spec)) => {
                let (unlabeled, _) = split_labels(train);
                DetectorModel::DeepSvdd(fit_deep_svdd(
                    &unlabeled,
                    spec,
                    &opt,
                    DeepSvddVariant::SoftBoundary { nu: *nu, r2: 0.0 },
                    None,
                )?)
            }
            (L::LinearOneClass, M::Hypersphere, F::Neural(spec)) => {
                let (unlabeled, _) = split_labels(train);
                DetectorModel::DeepSvdd(fit_deep_svdd(
                    &unlabeled,
                    spec,
                    &opt,
                    DeepSvddVariant::OneClass,
                    None,
                )?)
            }
            (L::SemiSupExponent, M::Hypersphere, F::Neural(spec)) => {
                let (unlabeled, labeled) = split_labels(train);
                DetectorModel::DeepSvdd(fit_deep_svdd(
                    &unlabeled,
                    spec,
                    &opt,
                    DeepSvddVariant::Sad { eta: reg.sad_eta },
                    labeled.as_ref(),
                )?)
            }
            (L::SquaredError, M::Subspace { variance_fraction }, F::RawInput) => {
                DetectorModel::Pca(fit_pca(train, *variance_fraction)?)
            }
            (L::SquaredError, M::Subspace { variance_fraction }, F::Kernel(kernel)) => {
                DetectorModel::Kpca(fit_kpca(train, kernel.clone(), *variance_fraction)?)
            }
            (L::SquaredError, M::Prototypes { k, norm }, F::RawInput) => {
                DetectorModel::Vq(fit_vq(train, *k, *norm, reg.seed)?)
            }
            (L::SquaredError, M::Autoencoder, F::Neural(spec)) => {
                let (fit_part, holdout) = ae_holdout(train, reg.holdout_fraction, reg.seed)?;
                DetectorModel::Ae(fit_autoencoder(&fit_part, spec, &opt, &holdout)?)
            }
            _ => unreachable!("combination validated in build_detector"),
        };
        Ok(model)
    }
}

/// Splits labeled rows from unlabeled ones; the labeled part is None when
/// every row is unlabeled.
fn split_labels(train: &Dataset) -> (Dataset, Option<Dataset>) {
    let labeled_idx: Vec<usize> = (0..train.n())
        .filter(|&i| train.labels()[i] != Label::Unlabeled)
        .collect();
    if labeled_idx.is_empty() {
        return (train.clone(), None);
    }
    let unlabeled_idx: Vec<usize> = (0..train.n())
        .filter(|&i| train.labels()[i] == Label::Unlabeled)
        .collect();
    (train.select(&unlabeled_idx), Some(train.select(&labeled_idx)))
}

/// Deterministic tail split for autoencoder early stopping.
fn ae_holdout(train: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidConfig(format!(
            "holdout fraction {fraction} outside [0, 1)"
        )));
    }
    let n = train.n();
    let n_holdout = ((n as f64 * fraction).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    if n < 2 {
        return Ok((train.clone(), train.clone()));
    }
    use rand::prelude::*;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(3)));
    let holdout = train.select(&order[..n_holdout]);
    let fit_part = train.select(&order[n_holdout..]);
    Ok((fit_part, holdout))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deep::Activation;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn cloud(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()])
            .collect();
        Dataset::from_rows(&rows, vec![Label::Unlabeled; n]).unwrap()
    }

    fn dims(loss: Loss, family: ModelFamily, map: FeatureMap) -> ModelingDimensions {
        ModelingDimensions {
            loss,
            model_family: family,
            feature_map: map,
            regularization: Regularization::default(),
        }
    }

    #[test]
    fn gaussian_row_dispatches() {
        let b = build_detector(dims(
            Loss::NegLogLikelihood,
            ModelFamily::Gaussian,
            FeatureMap::RawInput,
        ))
        .unwrap();
        let m = b.fit(&cloud(30, 1)).unwrap();
        assert_eq!(m.family_name(), "gaussian");
        let direct = crate::prob::fit_gaussian(&cloud(30, 1)).unwrap();
        let x = DVector::from_vec(vec![0.3, 0.4]);
        assert_eq!(m.score(&x), direct.score(&x));
    }

    #[test]
    fn svdd_row_dispatches() {
        let b = build_detector(dims(
            Loss::ShiftedHinge(0.1),
            ModelFamily::Hypersphere,
            FeatureMap::Kernel(KernelSpec::Rbf { gamma: 0.5 }),
        ))
        .unwrap();
        let m = b.fit(&cloud(20, 2)).unwrap();
        assert_eq!(m.family_name(), "svdd");
    }

    #[test]
    fn unsupported_combination_rejected() {
        let err = build_detector(dims(
            Loss::NegLogLikelihood,
            ModelFamily::Hypersphere,
            FeatureMap::RawInput,
        ))
        .unwrap_err();
        match err {
            Error::UnsupportedCombination(msg) => {
                assert!(msg.contains("Hypersphere") && msg.contains("NegLogLikelihood"));
            }
            other => panic!("wrong error {other:?}"),
        }
    }

    #[test]
    fn every_supported_row_fits_and_scores() {
        let train = cloud(25, 3);
        let rbf = FeatureMap::Kernel(KernelSpec::Rbf { gamma: 1.0 });
        let net = FeatureMap::Neural(
            MlpSpec::new(vec![2, 3, 2], Activation::Elu, false, 0).unwrap(),
        );
        let ae_net = FeatureMap::Neural(
            MlpSpec::new(vec![2, 1], Activation::Elu, true, 0).unwrap(),
        );
        let mut reg = Regularization::default();
        reg.optimizer = Some(Optimizer::adam(0.01, 8, 5, 1e-4));
        let rows: Vec<ModelingDimensions> = vec![
            dims(Loss::NegLogLikelihood, ModelFamily::Gaussian, FeatureMap::RawInput),
            dims(Loss::NegLogLikelihood, ModelFamily::Mixture { k: 2 }, FeatureMap::RawInput),
            dims(Loss::NegLogLikelihood, ModelFamily::KernelDensity, rbf.clone()),
            dims(Loss::NegLogLikelihood, ModelFamily::ProbabilisticPca { d: 1 }, FeatureMap::RawInput),
            dims(Loss::Hinge, ModelFamily::Ellipsoid, FeatureMap::RawInput),
            dims(Loss::ShiftedHinge(0.2), ModelFamily::Hypersphere, rbf.clone()),
            dims(Loss::ShiftedHinge(0.2), ModelFamily::Hypersphere, FeatureMap::RawInput),
            dims(Loss::ShiftedHinge(0.2), ModelFamily::Halfspace, rbf.clone()),
            dims(Loss::ShiftedHinge(0.2), ModelFamily::Hypersphere, net.clone()),
            dims(Loss::LinearOneClass, ModelFamily::Hypersphere, net.clone()),
            dims(Loss::SquaredError, ModelFamily::Subspace { variance_fraction: 0.9 }, FeatureMap::RawInput),
            dims(Loss::SquaredError, ModelFamily::Subspace { variance_fraction: 0.9 }, rbf),
            dims(
                Loss::SquaredError,
                ModelFamily::Prototypes { k: 3, norm: VqNorm::L2 },
                FeatureMap::RawInput,
            ),
            dims(Loss::SquaredError, ModelFamily::Autoencoder, ae_net),
        ];
        for mut d in rows {
            d.regularization = reg.clone();
            let b = build_detector(d.clone()).unwrap();
            let m = b.fit(&train).unwrap();
            let s = m.score(&DVector::from_vec(vec![0.5, 0.5]));
            assert!(s.is_finite(), "{} score not finite", m.family_name());
        }
    }

    #[test]
    fn sad_row_consumes_labels() {
        let mut train = cloud(25, 4);
        train.set_label(0, Label::Anomaly);
        train.set_label(1, Label::Normal);
        let net = FeatureMap::Neural(
            MlpSpec::new(vec![2, 3, 2], Activation::Elu, false, 0).unwrap(),
        );
        let mut d = dims(Loss::SemiSupExponent, ModelFamily::Hypersphere, net);
        d.regularization.optimizer = Some(Optimizer::adam(0.01, 8, 5, 1e-4));
        let m = build_detector(d).unwrap().fit(&train).unwrap();
        assert_eq!(m.family_name(), "deep-svdd");
    }

    #[test]
    fn level_set_membership_rules() {
        let train = cloud(20, 5);
        let svdd = build_detector(dims(
            Loss::ShiftedHinge(0.1),
            ModelFamily::Hypersphere,
            FeatureMap::Kernel(KernelSpec::Rbf { gamma: 0.5 }),
        ))
        .unwrap()
        .fit(&train)
        .unwrap();
        // far outside the data bounding box
        let far = DVector::from_vec(vec![100.0, 100.0]);
        assert_eq!(level_set_membership(&svdd, &far).unwrap(), Label::Anomaly);
        // deep inside the cloud
        let inside = DVector::from_vec(vec![0.5, 0.5]);
        assert_eq!(level_set_membership(&svdd, &inside).unwrap(), Label::Normal);

        let gauss = build_detector(dims(
            Loss::NegLogLikelihood,
            ModelFamily::Gaussian,
            FeatureMap::RawInput,
        ))
        .unwrap()
        .fit(&train)
        .unwrap();
        assert!(matches!(
            level_set_membership(&gauss, &inside),
            Err(Error::ModelHasNoIntrinsicBoundary("gaussian"))
        ));
    }
}
