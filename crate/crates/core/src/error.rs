use thiserror::Error;

/// Errors raised by the numerical core and the configuration layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("weight has no positivity interval")]
    NoPositivityInterval,

    #[error("positivity interval index {index} out of range (m = {count})")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("window length {delta} outside [0, {max}]")]
    WindowOutOfRange { delta: f64, max: f64 },

    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("argument {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("non-finite state after t = {t_last}")]
    BlowUp { t_last: f64 },

    #[error("integration span [{t0}, {t1}] not supported: {reason}")]
    InvalidSpan { t0: f64, t1: f64, reason: String },

    #[error("shooting from u(0) = {c} failed: {source}")]
    Shooting { c: f64, source: Box<Error> },

    #[error("singular Jacobian at ({u0}, {v0})")]
    SingularJacobian { u0: f64, v0: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("root bracket [{a}, {b}] has no sign change")]
    NoBracket { a: f64, b: f64 },

    #[error("degenerate boundary: f#({s}) = 0")]
    DegenerateBoundary { s: f64 },

    #[error("growth condition unmet: liminf g/G estimate {estimate} <= threshold {threshold}")]
    GrowthConditionUnmet { estimate: f64, threshold: f64 },

    #[error("{0}")]
    Inconclusive(String),

    #[error("config line {line}: key `{key}`: {message}")]
    Config { line: usize, key: String, message: String },

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
