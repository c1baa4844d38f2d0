use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("horizon {horizon} is not an integer multiple of step {step}")]
    NonCommensurate { horizon: f64, step: f64 },
    #[error("step {step} must lie in (0, 1)")]
    StepTooLarge { step: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("theta {theta} outside the initial segment domain [-{tau}, 0]")]
    OutOfDomain { theta: f64, tau: f64 },
    #[error("coarsening factor {factor} does not divide {steps} increments")]
    IndivisibleFactor { steps: usize, factor: usize },
    #[error("model has no jump part")]
    NoJumpPart,
    #[error("model has no Brownian part")]
    NoBrownianPart,
    #[error("model is not deterministic (drift or noise present)")]
    NotDeterministic,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("unknown model id `{0}`")]
    UnknownModel(String),
    #[error("steps do not nest: {0}")]
    NonNestedSteps(String),
    #[error("exploded fraction {fraction} at h = {h} exceeds budget {budget}")]
    ExplosionBudgetExceeded { h: f64, fraction: f64, budget: f64 },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("config error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("ladder does not nest: {0}")]
    Nesting(String),
    #[error("{context}: {source}")]
    Io {
        context: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            context: path.into(),
            source,
        }
    }
}
