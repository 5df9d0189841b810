//! Discriminative level-set estimators: MVE, kernel SVDD, and the OC-SVM,
//! with the hinge-loss machinery behind them.

mod mve;
mod smo;
mod svdd;

pub use mve::{fit_mve, MveModel};
pub use svdd::{
    default_nu_grid, fit_ocsvm, fit_svdd, fit_svdd_primal, one_class_hinge, select_nu_and_gamma,
    InputSvddModel, OcsvmModel, SvddModel,
};
