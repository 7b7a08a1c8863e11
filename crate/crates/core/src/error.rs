use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("level {level} out of range (depth {depth})")]
    LevelOutOfRange { level: usize, depth: usize },

    #[error("interval at level {level} has no descendants {generations} generations down (depth {depth})")]
    InsufficientDepth {
        level: usize,
        generations: usize,
        depth: usize,
    },

    #[error("martingale shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid jump law: {0}")]
    InvalidLaw(String),

    #[error("averaging property violated at level {level}, node {index}: defect {defect:e}")]
    NotAMartingale {
        level: usize,
        index: usize,
        defect: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {0} outside the domain of definition")]
    OutsideDomain(String),

    #[error("domain mismatch: expected {expected}, got {got}")]
    DomainMismatch { expected: String, got: String },

    #[error("quadrature did not converge: residual {residual:e}")]
    Quadrature { residual: f64 },

    #[error("sample too small: {got} < {need}")]
    SampleTooSmall { got: usize, need: usize },

    #[error("corrupt data: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
