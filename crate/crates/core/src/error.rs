use thiserror::Error;

/// Failure modes shared across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid family parameters: {0}")]
    InvalidFamily(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("need at least {needed} moments, got {got}")]
    InsufficientMoments { needed: usize, got: usize },

    #[error("need at least {needed} initial moments, got {got}")]
    InsufficientInitialMoments { needed: usize, got: usize },

    #[error("recurrence pivot vanishes in row {0}; supply more initial moments")]
    ZeroPivot(usize),

    #[error("non-finite Gram entry at ({0}, {1})")]
    NonFiniteEntry(usize, usize),

    #[error("moments are not band-limited to bandwidth {bandwidth}: |mu_{index}| = {value:e}")]
    MomentsNotBandLimited {
        bandwidth: usize,
        index: usize,
        value: f64,
    },

    #[error("breakpoint {0} lies outside the family domain")]
    BreakpointOutsideDomain(f64),

    #[error("matrix is not positive definite (pivot failure at step {0})")]
    NotPositiveDefinite(usize),

    #[error("multiplication matrix is reducible at step {0}")]
    IrreducibilityViolated(usize),

    #[error("singular triangular factor: zero diagonal at {0}")]
    SingularFactor(usize),

    #[error("off-diagonal block {rows}x{cols} needs rank {rank}, more than half its size")]
    RankExceedsHalfBlock { rows: usize, cols: usize, rank: usize },

    #[error("dense leaf starting at {leaf} is not positive definite (pivot {step})")]
    LeafNotPositiveDefinite { leaf: usize, step: usize },

    #[error("block range out of moment coverage: need index {needed}, have {available}")]
    RangeOutOfCoverage { needed: usize, available: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
