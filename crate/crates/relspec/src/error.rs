//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by grid, quotient, minimization and solver operations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Lp norms require p ≥ 1.
    #[error("lp_norm requires p >= 1, got {0}")]
    NormExponent(f64),
    /// Two fields from different grids were paired.
    #[error("grid mismatch: {0} vs {1} interior nodes")]
    GridMismatch(usize, usize),
    /// An operation that needs a nonzero field received the zero field.
    #[error("field is identically zero")]
    ZeroField,
    /// A quotient denominator fell below the degeneracy floor.
    #[error("degenerate input: quotient denominator {0:e} below 1e-300")]
    DegenerateDenominator(f64),
    /// A non-finite value appeared during an operator or quotient evaluation.
    #[error("evaluation produced a non-finite value in {0}")]
    NonFinite(&'static str),
    /// An operator or quotient was built with invalid exponents.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    /// An iterative method hit its iteration cap.
    #[error("{what} did not converge within {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        /// Which solver failed.
        what: &'static str,
        /// Iterations performed.
        iterations: usize,
        /// Last residual or error measure.
        residual: f64,
    },
    /// A linear solve met a numerically singular matrix.
    #[error("singular linear system (pivot {0:e})")]
    SingularSystem(f64),
}
