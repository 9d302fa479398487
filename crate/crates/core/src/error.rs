use thiserror::Error;

/// Errors surfaced by the library. CLI exit codes are derived from
/// [`Error::is_config`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported kernel configuration: {0}")]
    UnsupportedKernel(String),

    #[error("dimension mismatch: expected dim={expected}, got dim={got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{function}({radius}) = {value:e} exceeds the exponential tail bound {bound:e}")]
    TailBoundViolated {
        function: &'static str,
        radius: f64,
        value: f64,
        bound: f64,
    },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("quadrature did not reach tolerance {requested:e} (achieved {achieved:e})")]
    Quadrature { requested: f64, achieved: f64 },

    #[error("bandwidth interval is degenerate: lower={lower}, upper={upper}")]
    DegenerateInterval { lower: f64, upper: f64 },

    #[error("level cap {cap} exceeded at level {level} after {steps} steps")]
    LevelCapExceeded { cap: f64, level: f64, steps: usize },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("ground truth error: {0}")]
    GroundTruth(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("every bandwidth failed; first failure: {0}")]
    AllBandwidthsFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Whether the error stems from user configuration rather than a runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::UnsupportedKernel(_)
                | Error::Config(_)
                | Error::Json(_)
                | Error::DegenerateInterval { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
