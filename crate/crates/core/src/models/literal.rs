//! Encoder that maps a scalar literal value to a node vector,
//! `tanh(v·W + b)`.

use std::sync::Arc;

use super::ModelError;
use crate::grad::{Matrix, ParamId, ParamStore, Tape, Var};

/// Closed-form encoding of one value; `w` and `b` are `1 × d`.
pub fn encode_literal(value: f64, w: &[f64], b: &[f64]) -> Result<Vec<f64>, ModelError> {
    if w.len() != b.len() {
        return Err(ModelError::Dimension {
            expected: w.len(),
            got: b.len(),
        });
    }
    if !value.is_finite() {
        return Err(ModelError::Usage(format!("literal value {value} is not finite")));
    }
    Ok(w.iter().zip(b).map(|(w, b)| (value * w + b).tanh()).collect())
}

/// Shared encoder parameters inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiteralEncoder {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl LiteralEncoder {
    pub fn new(store: &mut ParamStore, weight: Matrix, bias: Matrix) -> Self {
        assert_eq!(weight.shape(), bias.shape(), "encoder weight and bias must both be 1 x d");
        assert_eq!(weight.rows(), 1, "encoder weight must be 1 x d");
        LiteralEncoder {
            weight: store.add("literal.weight", weight),
            bias: store.add("literal.bias", bias),
        }
    }

    /// Encodes `values` (one per row) on the tape, `n × d`.
    pub fn encode(&self, tape: &mut Tape, store: &ParamStore, values: Arc<Vec<f64>>) -> Var {
        let v = tape.leaf(Matrix::from_vec(values.len(), 1, values.to_vec()));
        let w = tape.param(store, self.weight);
        let b = tape.param(store, self.bias);
        let z = tape.matmul(v, w);
        let z = tape.add_row(z, b);
        tape.tanh(z)
    }
}
