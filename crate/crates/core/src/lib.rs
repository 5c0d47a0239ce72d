//! # alphamink
//!
//! A numerical toolkit for the calculus of α-concave functions on ℝⁿ
//! (n ∈ {1, 2}, −1/n < α < 0) and the associated Minkowski-type inverse
//! problem, solved through discrete optimal transport.
//!
//! An α-concave function is `f = (1 − α·φ)^{1/α}` for a convex base `φ`.
//! The crate provides:
//!
//! | Module | Provides |
//! |--------|----------|
//! | [`extgrid`] | Extended-real grid functions, quadrature, finite differences |
//! | [`legendre`] | Discrete Legendre–Fenchel transform, convexification, subgradients |
//! | [`alphafun`] | α-sums, total mass, first variations, surface-area measures |
//! | [`transport`] | Maximal-correlation transport: exact and entropic solvers, duals |
//! | [`minkowski`] | Inverse solver recovering an α-concave measure from its surface-area measure |
//! | [`verify`] | Executable diagnostics (necessary conditions, integrability, balance) |
//! | [`cli`] | Command-line frontend over JSON/CSV artifacts |
//!
//! ## Conventions
//!
//! - `+∞` is encoded as `f64::INFINITY`; `NaN` and `−∞` are rejected at
//!   construction. The arithmetic conventions live in [`extgrid::ext`].
//! - Points are `[f64; 2]`; one-dimensional data keeps the second
//!   coordinate at exactly `0.0`, so inner products need no dimension
//!   switch.
//! - Grid values are row-major with axis 0 slowest.

use thiserror::Error;

pub mod alphafun;
pub mod cli;
pub mod extgrid;
pub mod hull;
pub mod legendre;
pub mod minkowski;
pub mod transport;
pub mod verify;

/// Error type shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid grid values: {0}")]
    InvalidValues(String),

    #[error("non-finite integrand at contributing node {index}")]
    NonFiniteIntegrand { index: usize },

    #[error("node {index} is not interior to the finite domain")]
    BoundaryNode { index: usize },

    #[error("function is nondifferentiable at node {index}")]
    Nondifferentiable { index: usize },

    #[error("function is improper (no finite value)")]
    Improper,

    #[error("alpha = {alpha} outside (-1/{dim}, 0)")]
    AlphaOutOfRange { alpha: f64, dim: usize },

    #[error("alpha mismatch: {0} vs {1}")]
    AlphaMismatch(f64, f64),

    #[error("base function dips to {value} below the admissible bound 1/alpha = {bound}")]
    BaseBelowBound { value: f64, bound: f64 },

    #[error("moment parameters violate the integrability hypothesis: need -1/(n-l+p) < alpha, got n={n}, l={l}, p={p}, alpha={alpha}")]
    MomentHypothesis { n: usize, l: usize, p: f64, alpha: f64 },

    #[error("no (beta1, beta2) pair certifies the variational compatibility condition")]
    CertificationFailed,

    #[error("nondifferentiable-node fraction {frac:.3} exceeds threshold {max:.3}")]
    TooManyKinks { frac: f64, max: f64 },

    #[error("support is truncated by the grid with nonvanishing boundary values (max {max_boundary:.3e})")]
    TruncatedSupport { max_boundary: f64 },

    #[error("measure totals differ: {0} vs {1}")]
    UnequalTotals(f64, f64),

    #[error("measure has empty support")]
    EmptySupport,

    #[error("measure is degenerate: {0}")]
    DegenerateMeasure(String),

    #[error("matrix scaling did not converge in {0} iterations")]
    ScalingNotConverged(usize),

    #[error("solver precondition failed: {0}")]
    Precondition(String),

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Inner product of two points; exact for 1-D data because unused
/// coordinates are kept at 0.
#[inline]
pub fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Euclidean norm of a point.
#[inline]
pub fn norm(a: [f64; 2]) -> f64 {
    dot(a, a).sqrt()
}
