//! Reconstruction-based detectors: the anomaly score is a squared
//! reconstruction or quantization error, zero on-manifold.

mod kpca;
mod pca;
mod vq;

pub use kpca::{fit_kpca, select_kpca_gamma, KpcaModel};
pub use pca::{fit_pca, PcaModel};
pub use vq::{fit_vq, VqModel, VqNorm};

pub(crate) use vq::kmeans_pp_indices;
