use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("root solver did not converge after {attempts} attempts (worst residual {worst_residual:e})")]
    NonConvergence { attempts: usize, worst_residual: f64 },

    #[error("bracket [{low}, {high}] does not straddle the transition (indicator = {indicator} at both ends)")]
    BracketInvalid { low: f64, high: f64, indicator: bool },

    #[error("no amplitude minimum below threshold {threshold:e}")]
    EmptyScan { threshold: f64 },

    #[error("modified partition function vanishes (|Z~|/sum = {relative_magnitude:e}); use the at-zero closed forms")]
    AtZero { relative_magnitude: f64 },

    #[error("zero {index} belongs to a cluster of {multiplicity} coincident zeros")]
    DegenerateZero { index: usize, multiplicity: usize },

    #[error("size {size} exceeds the enumeration bound {bound}")]
    SizeExceeded { size: usize, bound: usize },

    #[error("root moduli span too wide for a double-precision eigen solve (log spread {log_span:.1})")]
    DynamicRange { log_span: f64 },

    #[error("finite-difference stencil evaluation failed: {0}")]
    StencilFailure(String),
}
