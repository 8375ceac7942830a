//! Dense-matrix numerics with reverse-mode gradients and Adam.
//!
//! A [`Tape`] records one forward pass over [`Matrix`] values. Parameters live
//! in a [`ParamStore`] outside the tape; each training step builds a fresh
//! tape, calls [`Tape::backward`], and hands the resulting gradients to
//! [`Adam`].

mod adam;
pub mod check;
mod matrix;
mod params;
mod sparse;
mod tape;

pub use adam::{Adam, AdamConfig};
pub use matrix::Matrix;
pub use params::{ParamId, ParamStore};
pub use sparse::{RelationalAdjacency, SparseRows};
pub use tape::{softmax_rows, Gradients, Tape, Var};

use thiserror::Error;

/// Default tolerance constants shared by tests and runtime checks.
pub mod tolerance {
    /// Row sums of probability outputs.
    pub const PROBABILITY_SUM: f64 = 1e-9;
    /// Relative error allowed between analytic and finite-difference gradients.
    pub const GRADIENT_CHECK: f64 = 1e-4;
    /// Central finite-difference step.
    pub const FD_STEP: f64 = 1e-5;
}

#[derive(Debug, Error, PartialEq)]
pub enum GradError {
    #[error("loss must be a 1x1 matrix, got {rows}x{cols}")]
    NonScalarLoss { rows: usize, cols: usize },
    #[error("shape mismatch for parameter `{name}`: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        name: String,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },
}

/// Relative error `‖a − b‖ / max(‖a‖ + ‖b‖, floor)`, used by gradient checks.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / (na + nb).max(1e-10)
}
