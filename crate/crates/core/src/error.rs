// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid request: {0}")]
    InvalidRequest(String),

    /// A steady-state or resolvent solve whose 1-norm condition estimate
    /// exceeded the configured ceiling (infinite for an exactly singular pivot).
    #[error("ill-conditioned solve at detuning {delta}: condition estimate {condition:e}")]
    IllConditioned { delta: f64, condition: f64 },

    #[error("steady state is not unique: null space has dimension {null_dim}")]
    DegenerateSteadyState { null_dim: usize },

    #[error("steady density operator is not positive semidefinite (shifted Cholesky failed at pivot {pivot})")]
    NotPositive { pivot: usize },

    #[error("adaptive integrator step size underflow at t = {time}")]
    StepUnderflow { time: f64 },

    #[error("reflection too weak at this detuning ({delta}): intensity {intensity:e}")]
    ReflectionTooWeak { delta: f64, intensity: f64 },

    #[error("{failed} of {total} samples failed (first failure: {first})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidRequest(msg.into())
}
