use thiserror::Error;

/// Errors raised by the planning and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PnoError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid scene (obstacle {index}): {reason}")]
    InvalidScene { index: usize, reason: String },

    #[error("unsupported scene: obstacles {first} and {second} overlap")]
    UnsupportedScene { first: usize, second: usize },

    #[error("sampling starved: {rejections} consecutive rejections")]
    SamplingStarved { rejections: u64 },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid tiling: {0}")]
    InvalidTiling(String),

    #[error("degenerate delta {delta}: must exceed {min_delta}")]
    DegenerateDelta { delta: f64, min_delta: f64 },

    #[error("unattainable confidence {p_success}: coverage probability is only {coverage}")]
    UnattainableConfidence { p_success: f64, coverage: f64 },

    #[error("infeasible stopping spec: {reason} (delta_des must exceed {min_delta_des})")]
    InfeasibleSpec { reason: String, min_delta_des: f64 },

    #[error("unreachable: {0}")]
    Unreachable(String),

    #[error("io: {0}")]
    Io(String),
}

impl PnoError {
    /// Short machine-readable category name.
    pub fn category(&self) -> &'static str {
        match self {
            PnoError::InvalidArgument(_) => "invalid-argument",
            PnoError::DimensionMismatch { .. } => "invalid-argument",
            PnoError::InvalidScene { .. } => "invalid-scene",
            PnoError::UnsupportedScene { .. } => "unsupported-scene",
            PnoError::SamplingStarved { .. } => "sampling-starved",
            PnoError::InvalidQuery(_) => "invalid-query",
            PnoError::InvalidTiling(_) => "invalid-tiling",
            PnoError::DegenerateDelta { .. } => "degenerate-delta",
            PnoError::UnattainableConfidence { .. } => "unattainable-confidence",
            PnoError::InfeasibleSpec { .. } => "infeasible-spec",
            PnoError::Unreachable(_) => "unreachable",
            PnoError::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for PnoError {
    fn from(e: std::io::Error) -> Self {
        PnoError::Io(e.to_string())
    }
}

impl From<csv::Error> for PnoError {
    fn from(e: csv::Error) -> Self {
        PnoError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for PnoError {
    fn from(e: serde_json::Error) -> Self {
        PnoError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, PnoError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(PnoError::InvalidArgument(msg.into()))
}
