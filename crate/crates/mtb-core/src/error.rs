//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by grid construction, propagation, basis synthesis,
/// pulse design, and link evaluation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument was outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Signal energy reached the edges of the simulation window, so the
    /// periodic spectral method would wrap it around.
    #[error("time window too small: {0}")]
    GridOverflow(String),

    /// Halving the split-step size kept changing the output by more than the
    /// convergence tolerance after the retry limit.
    #[error("split-step integration did not converge: {0}")]
    NonConvergence(String),

    /// The design problem admits no feasible coefficient vector.
    #[error("infeasible design problem: {0}")]
    Infeasible(String),

    /// A root-bracketing search could not enclose a sign change.
    #[error("bracketing failed: {0}")]
    BracketingFailure(String),

    /// Input/output shapes disagree (sample counts, coefficient lengths).
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Convenient alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
