use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("value {value} is not a multiple of 2^-{bits} in [0,1]")]
    OffGrid { value: f64, bits: u32 },

    #[error("scale 2^-{j} is finer than the grid resolution 2^-{bits}")]
    Resolution { j: u32, bits: u32 },

    #[error("{what}: about {estimate:.3e} items exceeds the budget of {budget}")]
    Budget { what: String, estimate: f64, budget: u64 },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("support of size {support} exceeds the allowed {max}")]
    Admissibility { support: usize, max: usize },

    #[error("invalid probability mass: {0}")]
    Pmf(String),

    #[error("solver stopped after {iterations} iterations without converging (rate {rate}, distortion {distortion})")]
    NonConvergence { iterations: usize, rate: f64, distortion: f64 },

    #[error("measure produced a window outside the family: {sample:?}")]
    Unsupported { sample: Vec<f64> },

    #[error("distortion argument {arg} lies outside the tabulated range [{lo}, {hi}]")]
    OutOfRange { arg: f64, lo: f64, hi: f64 },

    #[error("sequence is not subadditive at pairs {pairs:?}")]
    Subadditivity { pairs: Vec<(usize, usize)> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }
}
