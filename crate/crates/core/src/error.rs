use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the extraction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("point ({x}, {y}) lies outside the {width}x{height} domain")]
    OutOfDomain {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },

    #[error("invalid tensor at node {node}: {reason}")]
    Tensor { node: usize, reason: String },

    #[error("feature map is flat (max = 0); use the 2D solver instead of the lifted one")]
    DegenerateFeatureRange,

    #[error("front propagation exhausted before reaching the target")]
    PropagationExhausted,

    #[error("node budget of {0} exhausted before reaching the target")]
    BudgetExceeded(usize),

    #[error("backtracking did not reach the seed within {0} steps")]
    TraceDiverged(usize),

    #[error("backtracking stalled at ({x:.2}, {y:.2}): vanishing descent direction away from the seed")]
    StationaryPoint { x: f64, y: f64 },

    #[error("refinement failed: {0}")]
    RefinementFailed(String),

    #[error("ingestion error in {path}: {reason}")]
    Ingestion { path: PathBuf, reason: String },

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    /// Process exit code associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) => 2,
            Error::OutOfDomain { .. } => 3,
            Error::Ingestion { .. } | Error::Image(_) | Error::Io(_) | Error::Serde(_) => 4,
            Error::Tensor { .. } | Error::DegenerateFeatureRange => 5,
            Error::PropagationExhausted | Error::BudgetExceeded(_) => 6,
            Error::TraceDiverged(_) | Error::StationaryPoint { .. } => 7,
            Error::RefinementFailed(_) => 8,
        }
    }

    /// Short machine-readable name of the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::OutOfDomain { .. } => "out_of_domain",
            Error::Tensor { .. } => "tensor",
            Error::DegenerateFeatureRange => "degenerate_feature_range",
            Error::PropagationExhausted => "propagation_exhausted",
            Error::BudgetExceeded(_) => "budget_exceeded",
            Error::TraceDiverged(_) => "trace_diverged",
            Error::StationaryPoint { .. } => "stationary_point",
            Error::RefinementFailed(_) => "refinement_failed",
            Error::Ingestion { .. } => "ingestion",
            Error::Image(_) => "image",
            Error::Io(_) => "io",
            Error::Serde(_) => "serialization",
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
