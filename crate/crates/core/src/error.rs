use thiserror::Error;

/// Errors produced while building, evaluating, or sampling copulas.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge within {max_subdivisions} subdivisions (estimate {estimate}, error {error})")]
    NonConvergence {
        max_subdivisions: usize,
        estimate: f64,
        error: f64,
    },

    #[error("integrand returned a non-finite value at {0}")]
    NonFinite(f64),

    #[error("root is not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("tabulated values are not monotone near x = {0}")]
    NotMonotone(f64),

    #[error("support function is invalid: {}", .0.join("; "))]
    SupportInvalid(Vec<String>),

    #[error("integral diverged: {0}")]
    IntegralDiverged(String),

    #[error("positivity violated: {0}")]
    PositivityViolated(String),

    #[error("L is not positive at u = {0}")]
    LNotPositive(f64),

    #[error("degenerate opposite diagonal: 1 - omega'(u) = {0}")]
    DegenerateDiagonal(f64),

    #[error("conditional CDF inversion failed at u = {u}, t = {t}")]
    InversionFailed { u: f64, t: f64 },

    #[error("toxic load is zero on [0, {0}]")]
    ZeroLoad(f64),

    #[error("ambiguous context: {0}")]
    AmbiguousContext(String),

    #[error("incompatible probit levels: {0}")]
    IncompatibleLevels(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
