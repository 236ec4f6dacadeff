// SPDX-License-Identifier: Apache-2.0

//! Independent reference solutions used to validate the closed forms.

pub mod dense;
pub mod transient;

use thiserror::Error;

use crate::sparse::SolveError;

pub use dense::{dense_solve, DENSE_LIMIT};
pub use transient::{transient_steady_state, TransientOptions, TransientResult, TRANSIENT_LIMIT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("unit has no segments")]
    Empty,
    #[error("unit is disconnected")]
    Disconnected,
    #[error("unit too large for this oracle: {size} > {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("dense system is singular")]
    Singular,
    #[error("dense solve residual {0:.3e} exceeds 1e-10")]
    Residual(f64),
    #[error("transient did not reach steady state in {steps} steps (last relative change {change:.3e})")]
    NoConvergence { steps: usize, change: f64 },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("{0}")]
    Config(String),
}
