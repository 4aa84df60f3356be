use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid interval [{lower}, {upper}]")]
    InvalidInterval { lower: f64, upper: f64 },

    #[error("degenerate interval [{0}, {0}] has no log-range")]
    DegenerateInterval(f64),

    #[error("cannot build {classes} classes from {distinct} distinct values")]
    TooManyClasses { classes: usize, distinct: usize },

    #[error("zero variance at channel {channel}, grid point {point}")]
    ZeroVariance { channel: usize, point: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("subsampling step {step} leaves no usable grid of length {len}")]
    EmptyGrid { step: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("split {split} has an empty side")]
    EmptySplit { split: usize },

    #[error("pooled covariance is singular")]
    SingularCovariance,

    #[error("kernel matrix has no positive eigenvalues after centering")]
    DegenerateKernel,

    #[error("could not draw a training split covering all classes after {0} attempts")]
    SplitFailed(usize),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("row {row}, column {column}: {message}")]
    Schema {
        row: usize,
        column: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that come from fitting or numerics rather than from
    /// malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::FitFailed(_)
                | Error::NumericalFailure(_)
                | Error::SingularCovariance
                | Error::DegenerateKernel
                | Error::EmptySplit { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
