use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point coordinate {value} outside the unit interval")]
    OutsideUnitCube { value: f64 },
    #[error("invalid parameter for {family}: {reason}")]
    InvalidParameter {
        family: &'static str,
        reason: String,
    },
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("sample is empty")]
    EmptySample,
    #[error("ties in column {column}; ranks are ill-defined (use the jitter tie policy)")]
    Ties { column: usize },
    #[error("non-finite value in column {column}")]
    NonFinite { column: usize },
    #[error("operation requires pseudo-uniform data in [0,1]")]
    NotPseudoUniform,
    #[error("grid has no margin point (1,..,{value},..,1) on axis {axis}")]
    MissingMarginPoint { axis: usize, value: f64 },
    #[error("covariance factorization failed at max jitter; most negative eigenvalue estimate {min_eigenvalue:e}")]
    FactorizationFailed { min_eigenvalue: f64 },
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid bandwidth: {0}")]
    InvalidBandwidth(String),
    #[error("operation requires dimension 2, got {0}")]
    RequiresBivariate(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("score derivative bound is not finite; delta-method width is undefined")]
    UnboundedScore,
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;
