use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZrpError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole of the digamma function at z = {0}")]
    Pole(Complex64),

    #[error("argument {e_tilde} sits on Landau level n = {level}")]
    LandauPole { e_tilde: Complex64, level: i64 },

    #[error("pole pairing failed: E = {e_tilde} is within {distance:e} of the odd integer {odd}")]
    PolePairing {
        e_tilde: Complex64,
        odd: i64,
        distance: f64,
    },

    #[error("singular argument: {0}")]
    Singular(String),

    #[error("zero electric field: evaluate the closed-form zero-field denominator instead")]
    ZeroField,

    #[error("field too weak: required truncation {required:.3e} exceeds cap {cap:.3e}")]
    FieldTooWeak { required: f64, cap: f64 },

    #[error("quadrature did not reach tolerance: abs_err = {abs_err:.3e}, target = {target:.3e}")]
    Accuracy { abs_err: f64, target: f64 },

    #[error("{operation} did not converge after {iterations} iterations (best residual {residual:.3e})")]
    NonConvergence {
        operation: &'static str,
        iterations: usize,
        residual: f64,
        /// Best iterate, as (re, im) or (Re Ẽ, 𝓔̃).
        best: [f64; 2],
    },

    #[error("degenerate {0}")]
    Degenerate(String),

    #[error("iterate left the valid domain: {0}")]
    DomainExit(String),

    #[error("bound state (Im E >= 0) has no finite lifetime")]
    InfiniteLifetime,

    #[error("scan failed: {failed} of {total} cells could not be evaluated")]
    ScanFailed { failed: usize, total: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, ZrpError>;
