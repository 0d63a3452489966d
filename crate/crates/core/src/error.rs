use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("system label `{0}` appears more than once")]
    LabelCollision(String),

    #[error("unknown system label `{0}`")]
    UnknownLabel(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("trace is {0}, expected 1")]
    InvalidTrace(f64),

    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },

    #[error("channel is not trace preserving (defect {0:e})")]
    NotTracePreserving(f64),

    #[error("conditioning event has probability {0:e}")]
    UndefinedConditioning(f64),

    #[error("causal map violates an invariant: {0}")]
    InvariantViolation(String),

    #[error("axis vector has norm {0}, expected 1")]
    NotUnitVector(f64),

    #[error("distribution is not normalized (total {0})")]
    NotNormalized(f64),

    #[error("invalid probability table: {0}")]
    InvalidDistribution(String),

    #[error("expected a bipartite two-qubit operator, got {0} factors")]
    NotBipartite(usize),

    #[error("not a probabilistic mixture: {0}")]
    NotProbabilisticMixture(String),

    #[error("no counts available: {0}")]
    EmptyCounts(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
