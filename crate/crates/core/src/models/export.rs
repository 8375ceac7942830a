//! JSON checkpoint layout for trained parameters.
//!
//! ```json
//! {
//!   "format": "carekg-checkpoint",
//!   "version": 1,
//!   "model": "RGCN3+lit",
//!   "params": [{"name": "entity", "rows": 2, "cols": 3, "data": [...]}],
//!   "nodes": ["http://...", "..."]
//! }
//! ```
//!
//! `data` is row-major. `nodes` names the rows of the entity table, if the
//! model has one.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::grad::{Matrix, ParamStore};

pub const CHECKPOINT_FORMAT: &str = "carekg-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointParam {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model: String,
    pub params: Vec<CheckpointParam>,
    #[serde(default)]
    pub nodes: Vec<String>,
}

impl Checkpoint {
    pub fn from_store(model: impl Into<String>, store: &ParamStore, nodes: Vec<String>) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            model: model.into(),
            params: store
                .iter()
                .map(|(_, name, m)| CheckpointParam {
                    name: name.to_string(),
                    rows: m.rows(),
                    cols: m.cols(),
                    data: m.data().to_vec(),
                })
                .collect(),
            nodes,
        }
    }

    pub fn to_store(&self) -> Result<ParamStore, ModelError> {
        let mut store = ParamStore::new();
        for p in &self.params {
            if p.data.len() != p.rows * p.cols {
                return Err(ModelError::Checkpoint(format!(
                    "parameter `{}` has {} values for shape {}x{}",
                    p.name,
                    p.data.len(),
                    p.rows,
                    p.cols
                )));
            }
            store.add(p.name.clone(), Matrix::from_vec(p.rows, p.cols, p.data.clone()));
        }
        Ok(store)
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let c: Checkpoint = serde_json::from_str(text)?;
        if c.format != CHECKPOINT_FORMAT {
            return Err(ModelError::Checkpoint(format!("unknown format `{}`", c.format)));
        }
        if c.version != CHECKPOINT_VERSION {
            return Err(ModelError::Checkpoint(format!("unsupported version {}", c.version)));
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_exact() {
        let mut store = ParamStore::new();
        store.add("w", Matrix::from_vec(2, 2, vec![0.1, -1.0 / 3.0, 1e-300, 7.0]));
        store.add("b", Matrix::from_vec(1, 1, vec![f64::MIN_POSITIVE]));
        let c = Checkpoint::from_store("toy", &store, vec!["http://x.org/a".into()]);
        let back = Checkpoint::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_store().unwrap(), store);
        let bad = c.to_json().unwrap().replace("carekg-checkpoint", "other");
        assert!(Checkpoint::from_json(&bad).is_err());
    }
}
