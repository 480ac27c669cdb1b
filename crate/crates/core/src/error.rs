use thiserror::Error;

/// Errors raised by the numeric and symbolic layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("sample count {got} does not match grid size {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("exponent {0} is outside [1, inf]")]
    InvalidExponent(String),

    #[error("cannot parse exponent {0:?}")]
    ParseExponent(String),

    #[error("anti-aliasing guard violated: need {required} < N/(2M) = {available}")]
    AliasingGuard { required: f64, available: f64 },

    #[error("lattice point {0:?} lies outside the decomposition bank")]
    OutsideBank(Vec<i64>),

    #[error("truncation tail {tail:.3e} exceeds tolerance {tolerance:.3e}")]
    Truncation { tail: f64, tolerance: f64 },

    #[error("window function vanishes identically")]
    ZeroWindow,

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("exponent formula has a pole at s = n/q'")]
    Pole,

    #[error("rule set inconsistent: sufficient {sufficient:?} vs necessary {necessary:?}")]
    Inconsistent {
        sufficient: Vec<String>,
        necessary: Vec<String>,
    },

    #[error("fit needs at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },

    #[error("non-positive value {0} in log-log fit")]
    NonPositive(f64),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
