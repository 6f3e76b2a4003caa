use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("coefficient `{name}` evaluates to {value} at {point:?}")]
    BadCoefficient {
        name: String,
        value: f64,
        point: Vec<f64>,
    },

    #[error("φ is not monotone at t = {t}: derivative {deriv}")]
    NonMonotone { t: f64, deriv: f64 },

    #[error("value {0} is not attained within the bracket growth limit")]
    InverseBracket(f64),

    #[error("no interior maximizer for the conjugate at s = {0}")]
    ConjugateBracket(f64),

    #[error("sampling did not stabilize within {budget} points (last change {change:e})")]
    Unstable { budget: usize, change: f64 },

    #[error("overflow evaluating φ at t = {t}")]
    Overflow { t: f64 },

    #[error("quadrature did not reach tolerance (error estimate {estimate:e})")]
    Quadrature { estimate: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("construction check failed: {0}")]
    Construction(String),

    #[error("inconsistent condition reports: {0}")]
    Inconsistent(String),

    #[error("unrecognized structure: {0}")]
    Unrecognized(String),

    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
