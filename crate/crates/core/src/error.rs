use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("entry ({i},{j}) lies outside the declared bandwidth {bandwidth}")]
    BandwidthViolation { i: usize, j: usize, bandwidth: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("partition mismatch: {0}")]
    PartitionMismatch(String),
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("bound inapplicable: {0}")]
    BoundInapplicable(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix still indefinite after jitter (min eigenvalue {0:.3e})")]
    StillIndefinite(f64),
    #[error("observation row {0} is identically zero")]
    ZeroRow(usize),
    #[error("innovation covariance R + H C H^T is not positive definite")]
    SingularInnovation,
    #[error("prior is in the wrong form for this operation: {0}")]
    PriorFormMismatch(&'static str),
    #[error("MALA proposal requires a gradient")]
    MissingGradient,
    #[error("forward map failed while updating block {block}: {msg}")]
    ForwardMap { block: usize, msg: String },
    #[error("non-finite state encountered")]
    NonFiniteState,
    #[error("series too short: {0} samples (need at least 100)")]
    SeriesTooShort(usize),
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("chain has no acceptance log (exact Gibbs)")]
    NoAcceptanceLog,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("line search failed after {iterations} iterations (best objective {objective:.6e})")]
    LineSearchFailure { iterations: usize, objective: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
