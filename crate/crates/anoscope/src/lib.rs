//! anoscope: anomaly detection under one contract.
//!
//! Every detector family — probabilistic (Gaussian, GMM, KDE, pPCA),
//! one-class boundaries (MVE, SVDD, OC-SVM, Deep SVDD), and reconstruction
//! models (PCA, kernel PCA, VQ, autoencoder) — is declared as a
//! (loss, model family, feature map) triple and fitted through
//! [`detector::build_detector`]. Fitted models expose `score(x)` with a
//! single orientation: larger = more anomalous. On top of that sit
//! empirical threshold calibration, threshold-free evaluation metrics,
//! and relevance heatmaps for kernel density scores.
//!
//! See the `examples/` directory for one runnable walkthrough per
//! capability.

pub mod bench;
pub mod checkpoint;
pub mod data;
pub mod dataset;
pub mod deep;
pub mod detector;
pub mod error;
pub mod eval;
pub mod explain;
pub mod kernel;
pub mod oneclass;
pub mod prob;
pub mod recon;
pub mod threshold;

pub use dataset::{Dataset, Label};
pub use detector::{
    build_detector, level_set_membership, DetectorModel, FeatureMap, Loss, ModelFamily,
    ModelingDimensions, Regularization,
};
pub use error::{Error, Result};
pub use kernel::KernelSpec;
pub use threshold::{calibrate_threshold, detect, DecisionThreshold};
