//! Error taxonomy shared by every module.
//!
//! Geometric preconditions (points on boundary strata, empty level sets,
//! degenerate gradients) are reported as typed errors instead of NaN so that
//! callers can distinguish "the check failed" from "the check did not apply".

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid gauge: {0}")]
    InvalidGauge(String),

    /// Positively homogeneous functions have no gradient at the origin.
    #[error("gauge gradient is undefined at the origin")]
    SingularPoint,

    /// p-norm style gauges with exponent below 2 lose second derivatives on
    /// coordinate hyperplanes of the mapped argument; the gradient call
    /// refuses points within a relative 1e-9 of such a hyperplane.
    #[error("gauge is not smooth enough near coordinate hyperplane (component {component})")]
    NonDifferentiable { component: usize },

    #[error("invalid cone: {0}")]
    InvalidCone(String),

    #[error("point lies on a lower-dimensional boundary stratum ({active} active facets)")]
    StratumPoint { active: usize },

    #[error("support maximization did not converge: best value {value:.6e}, residual {residual:.3e}")]
    DualConvergence { value: f64, residual: f64 },

    #[error("support maximizer is ambiguous: two maximizers {distance:.3e} apart with value gap {value_gap:.3e}")]
    AmbiguousMaximizer { distance: f64, value_gap: f64 },

    #[error("invalid solution parameters: {0}")]
    InvalidSolution(String),

    /// A level value at or above the peak height has empty superlevel set.
    #[error("empty level set: t = {t} is not below the peak height t0 = {t0}")]
    EmptyLevel { t: f64, t0: f64 },

    #[error("invalid finite-difference scheme: {0}")]
    InvalidScheme(String),

    #[error("stencil evaluation failed: {0}")]
    StencilEvaluation(String),

    #[error("stencil placement: {0}")]
    Placement(String),

    #[error("gradient degenerate on the stencil (|grad u| = {norm:.3e})")]
    DegenerateGradient { norm: f64 },

    #[error("invalid quadrature spec: {0}")]
    InvalidQuadrature(String),

    #[error("truncation tail bound {bound:.3e} exceeds the error target {target:.3e}")]
    Truncation { bound: f64, target: f64 },

    #[error("unsupported set shape: {0}")]
    UnsupportedShape(String),

    #[error("test function violates a hypothesis: {0}")]
    Hypothesis(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
