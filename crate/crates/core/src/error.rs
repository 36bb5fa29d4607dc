use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sequence")]
    EmptySequence,
    #[error("error vector has {got} components, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("pulse duration must be positive, got {0}")]
    InvalidDuration(f64),
    #[error("variable index {index} out of range for a {num_vars}-variable series")]
    BadVariable { index: usize, num_vars: usize },
    #[error("series shapes differ: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("division by a series with zero constant term")]
    ZeroConstantTerm,
    #[error("square root needs a positive real constant term, got {0}")]
    NonPositiveSqrt(num_complex::Complex64),
    #[error("multi-index {index:?} outside caps {caps:?}")]
    IndexOutOfRange { index: Vec<usize>, caps: Vec<usize> },
    #[error("unknown sequence '{0}'")]
    UnknownSequence(String),
    #[error("sequence length must be odd and at least 3, got {0}")]
    InvalidLength(usize),
    #[error("sequence '{0}' is not symmetric with pi areas")]
    NotSymmetric(String),
    #[error("expansion point is degenerate: zero generalized Rabi frequency")]
    DegenerateExpansion,
    #[error("invalid nullification problem: {0}")]
    InvalidProblem(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
