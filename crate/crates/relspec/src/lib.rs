//! Relative spectra of homogeneous nonlinear operators on 1-D Dirichlet grids.
//!
//! The central object is the generalized Rayleigh quotient
//! `⟨F(u), g(u)⟩ / ⟨G(u), g(u)⟩` of one nonlinear operator relative to another.
//! When `F` and `G` are positively homogeneous of the same degree the quotient
//! is scale-invariant and its infimum is a number — the first eigenvalue of
//! `F` relative to `G` — rather than a function of the trial element. This
//! crate discretizes a catalog of such quotients on uniform 1-D Dirichlet
//! grids, minimizes them by sphere-projected multi-start gradient descent,
//! checks the identities and inequalities they satisfy against independent
//! analytic oracles, and solves the associated perturbed equations below the
//! spectral threshold.
//!
//! Modules follow the pipeline:
//!
//! * [`grid`] — grids, difference operators, quadrature, pairings
//! * [`operators`] — the catalog of homogeneous nonlinear operators
//! * [`quotient`] — quotient catalog with values and analytic gradients
//! * [`mod@minimize`] — multi-start projected descent for the infimum
//! * [`oracles`] — independent baselines (tridiagonal eigensolve, closed
//!   forms, brute-force scans, a dense Newton reference)
//! * [`experiments`] — scaling-law fits, identity/inequality verification,
//!   solvability scans and hypothesis probes
//!
//! Everything is deterministic given a seed: the same inputs produce
//! bit-identical outputs regardless of thread count.

// Validation uses `!(x >= bound)` on purpose: the negated form also rejects
// NaN, which a plain `x < bound` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod grid;
pub mod minimize;
pub mod operators;
pub mod oracles;
pub mod quotient;
pub mod rng;

pub use error::Error;
pub use grid::{Field, Grid1D};
pub use minimize::{minimize, minimize_seq, refine_study, MinimizationResult, MinimizeOptions};
pub use operators::OperatorSpec;
pub use oracles::{brute_min, dense_newton, pi_p, tridiag_lap_eig, EigenPair};
pub use quotient::{GradCheckReport, QuotientSpec};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
