//! Feedforward networks with exact backprop, the autoencoder detector, and
//! Deep SVDD variants.

mod autoencoder;
mod deep_svdd;
mod mlp;
mod optim;

pub use autoencoder::{fit_autoencoder, AeModel};
pub use deep_svdd::{fit_deep_svdd, DeepSvddModel, DeepSvddVariant};
pub use mlp::{embedding_variance, Activation, Layer, Mlp, MlpSpec, ParameterGrads, Tape};
pub use optim::{GradAccum, OptState, Optimizer, OptimizerKind};
