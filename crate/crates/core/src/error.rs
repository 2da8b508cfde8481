use thiserror::Error;

use crate::oracle::AccessMode;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {n} exceeds the limit of {limit}")]
    DimensionTooLarge { n: usize, limit: usize },

    #[error("coordinate {coord} is out of range for dimension {n}")]
    CoordinateOutOfRange { coord: usize, n: usize },

    #[error("coordinate {0} is fixed by the restriction")]
    CoordinateFixed(usize),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid restriction: {0}")]
    InvalidRestriction(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{requested:?} access is not granted by a {granted:?} oracle")]
    AccessDenied {
        requested: AccessMode,
        granted: AccessMode,
    },

    #[error("subcube has zero probability")]
    ZeroWeight,

    #[error("rejection sampling gave up after {attempts} attempts")]
    RejectionCap { attempts: u64 },

    #[error("search budget exceeded: {calls} recursive calls (limit {limit})")]
    BudgetExceeded { calls: u64, limit: f64 },

    #[error("normalization failed: {0}")]
    Normalization(String),

    #[error("insufficient sample: need {needed} points, have {have}")]
    InsufficientSample { needed: usize, have: usize },

    #[error("learner failed: {0}")]
    Learner(String),

    #[error("unknown target class `{0}`")]
    UnknownClass(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps `self` with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
