use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("tabulated nonlinearity evaluated at {t}, outside table range [{lo}, {hi}]")]
    OutsideTable { t: f64, lo: f64, hi: f64 },

    #[error("nonlinearity evaluation failed at u = {0}")]
    Evaluation(f64),

    #[error("tabulated nonlinearity has no antiderivative; supply G explicitly")]
    MissingAntiderivative,

    #[error("solution blew up: |u| = {u:e} at r = {r:e}")]
    BlowUp { r: f64, u: f64 },

    #[error("monotone iteration lost monotonicity at iteration {iteration}, node {node} (drop {drop:e})")]
    MonotonicityViolation { iteration: usize, node: usize, drop: f64 },

    #[error("no divergence found for lambda up to {lambda_cap:e}; f looks sublinear on the explored range")]
    NoDivergence { lambda_cap: f64 },

    #[error("no convergent lambda recorded; bracket has no lower end")]
    EmptyBracket,

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("quadratic form coefficient is not finite on cell [{a:e}, {b:e}]")]
    NonFiniteCoefficient { a: f64, b: f64 },

    #[error("mass matrix is singular")]
    SingularMass,

    #[error("profile residual {residual:e} exceeds the bound {bound:e}")]
    ResidualTooLarge { residual: f64, bound: f64 },

    #[error("profile is not singular on the fit window")]
    NotSingular,

    #[error("fit window [{a:e}, {b:e}] is invalid: {reason}")]
    BadWindow { a: f64, b: f64, reason: String },

    #[error("logarithmic singularity (u ~ {log_slope:.6} |log r|); no power-law exponent")]
    LogSingularity { log_slope: f64 },

    #[error("source term g(u) is negative ({value:e}) at u = {u}")]
    NegativeSource { u: f64, value: f64 },

    #[error("stability certificate required: {0}")]
    NotSemiStable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
