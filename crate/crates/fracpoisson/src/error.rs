//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by series evaluation, parameter validation, simulation
/// and grid-based operators.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A truncated series hit its term cap before the stagnation criterion
    /// was met. `level` names the failing summation level for nested series
    /// (for example `"r"`, `"m"` or `"prabhakar"`).
    #[error("series did not converge: {context}, level {level}, {terms} terms used")]
    NonConvergence {
        context: String,
        level: &'static str,
        terms: u32,
    },

    /// A power series operation that requires an invertible constant term
    /// (exponentiation to a real power, reciprocal) received a series whose
    /// constant term vanishes.
    #[error("power series operation requires a nonzero constant term: {0}")]
    ZeroConstantTerm(String),

    /// A time-grid operator was asked to work on a grid too short for its
    /// stencil.
    #[error("time grid too coarse: {points} points, at least {required} required")]
    GridTooCoarse { points: usize, required: usize },

    /// A rejection or first-passage sampler exceeded its iteration cap.
    #[error("sampling stalled: {context} exceeded {cap} iterations")]
    SamplingStall { context: String, cap: u64 },

    /// Parameter outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn non_convergence(
        context: impl Into<String>,
        level: &'static str,
        terms: u32,
    ) -> Self {
        Error::NonConvergence {
            context: context.into(),
            level,
            terms,
        }
    }
}
