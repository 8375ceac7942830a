//! Tabular baselines: the feature encoder, logistic regression, a random
//! forest and a feed-forward network.
//!
//! All classifiers emit one probability row per sample. The network also
//! serves as the classification head on top of patient embeddings.

mod forest;
mod mlp;
mod tabular;

pub use forest::{train_rf, Forest, ForestConfig};
pub use mlp::{train_logreg, train_nn, LogRegConfig, Mlp, MlpConfig};
pub use tabular::{encode_tabular, ColumnEncoding, TabularColumn, TabularEncoder, TabularMatrix};

use thiserror::Error;

use crate::grad::{GradError, Matrix};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid usage: {0}")]
    Usage(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Grad(#[from] GradError),
}

/// A fitted model that scores samples.
pub trait Classifier {
    /// Class probabilities, one row per row of `x`.
    fn predict_proba(&self, x: &Matrix) -> Result<Matrix, BaselineError>;
}

pub(crate) fn check_xy(x: &Matrix, y: &[usize], classes: usize) -> Result<(), BaselineError> {
    if x.rows() == 0 {
        return Err(BaselineError::Usage("no training rows".into()));
    }
    if x.rows() != y.len() {
        return Err(BaselineError::Dimension {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if let Some(k) = y.iter().find(|&&k| k >= classes) {
        return Err(BaselineError::Usage(format!("label {k} outside 0..{classes}")));
    }
    if !x.is_finite() {
        return Err(BaselineError::Usage("non-finite feature value".into()));
    }
    Ok(())
}
