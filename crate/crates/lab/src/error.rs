use std::path::{Path, PathBuf};

use copula_core::kernel::MomentReport;

/// Config problems. Every rejected config maps to exactly one variant.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("seed is required")]
    MissingSeed,
    #[error("n-ladder is empty")]
    EmptyLadder,
    #[error("n-ladder must be strictly increasing: entry {index} ({next}) follows {prev}")]
    LadderNotIncreasing {
        index: usize,
        prev: usize,
        next: usize,
    },
    #[error("sample size {0} is too small for this study")]
    SampleSize(usize),
    #[error("replicates must be at least 1")]
    ZeroReplicates,
    #[error("field_draws must be at least 1")]
    ZeroFieldDraws,
    #[error("meta_replicates must be at least 1")]
    ZeroMetaReplicates,
    #[error("grid needs at least 2 points per axis, got {0}")]
    GridTooCoarse(usize),
    #[error("unknown copula family {0:?}")]
    UnknownFamily(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("LIL ladder entry {0} is below 3; log log n is undefined")]
    LilSampleSize(usize),
    #[error("LIL corridor [{0}, {1}] must satisfy 0 < lo < hi")]
    Corridor(f64, f64),
    #[error("smoothing study needs a [smoothing] table")]
    MissingSmoothing,
    #[error("unknown kernel {0:?}")]
    UnknownKernel(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("bandwidth must be positive and finite, got {0}")]
    Bandwidth(f64),
    #[error("trim must lie in [0, 0.5), got {0}")]
    Trim(f64),
    #[error("invalid rank score: {0}")]
    Score(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("kernel fails its order conditions (max residual {:.3e}); refusing to run", .0.max_residual())]
    KernelOrder(Box<MomentReport>),
    #[error(transparent)]
    Numerical(#[from] copula_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit code: 2 for bad configs, 3 for numerical failures,
    /// 1 for IO and format errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::KernelOrder(_) => 2,
            LabError::Numerical(_) => 3,
            LabError::Io { .. } | LabError::Csv(_) | LabError::Json(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
