use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported modeling combination: {0}")]
    UnsupportedCombination(String),
    #[error("score sample is empty")]
    EmptyScores,
    #[error("alpha {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("model family {0} has no intrinsic decision boundary; calibrate a threshold instead")]
    ModelHasNoIntrinsicBoundary(&'static str),

    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("degenerate sampling box")]
    DegenerateBox,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("split fractions invalid: {0:?}")]
    FractionsInvalid([f64; 3]),
    #[error("parse error at row {row}, column {col}: {msg}")]
    ParseError { row: usize, col: usize, msg: String },
    #[error("cannot read {path}: {source}")]
    MissingFile {
        path: String,
        source: std::io::Error,
    },

    #[error("too few samples: need at least {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("covariance matrix is singular")]
    SingularCovariance,
    #[error("mixture component {0} degenerated")]
    DegenerateComponent(usize),
    #[error("bandwidth parameter gamma must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("rank deficient: fewer than {0} positive eigenvalues")]
    RankDeficient(usize),

    #[error("all {0} elemental subsets were singular")]
    SingularSubset(usize),
    #[error("dual solver did not converge after {iterations} passes (KKT violation {violation:.3e})")]
    SolverNotConverged { iterations: usize, violation: f64 },
    #[error("nu must lie in (0, 1], got {0}")]
    InvalidNu(f64),
    #[error("loss undefined for unlabeled input")]
    UnlabeledInput,
    #[error("validation set has no labeled anomaly/normal pair")]
    NoLabeledValidation,

    #[error("kernel matrix not positive semi-definite")]
    NonPsdKernelMatrix,
    #[error("matrix is not symmetric positive semi-definite")]
    NonPsdMatrix,
    #[error("empty cluster {0} could not be reseeded")]
    EmptyCluster(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training diverged at epoch {0} (loss is not finite)")]
    Diverged(usize),
    #[error("embedding collapsed at epoch {epoch}: variance ratio {variance_ratio:.3e} below guard")]
    CollapseDetected { epoch: usize, variance_ratio: f64 },
    #[error("hypersphere feature maps must not use bias terms")]
    BiasTermsForbidden,

    #[error("heatmap is identically zero")]
    ZeroHeatmap,
    #[error("both classes must be present")]
    SingleClass,
    #[error("no anomalies in the labeled sample")]
    NoAnomalies,
    #[error("k={k} outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("config error: {0}")]
    ConfigError(String),
    #[error("checkpoint format error: {0}")]
    CheckpointFormat(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
