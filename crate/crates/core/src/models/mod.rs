//! Graph embedding models trained on the cohort graphs.
//!
//! * [`transe`]: translational embeddings with margin ranking loss.
//! * [`walks`] and [`cbow`]: RDF2Vec-style random walks fed to a CBOW model
//!   with negative sampling.
//! * [`rgcn`]: a relational GCN with basis decomposition and an optional
//!   literal encoder, trained end to end on patient outcomes.
//!
//! All models index the graph through [`GraphIndex`], whose numbering does
//! not depend on triple insertion order.

pub mod cbow;
pub mod export;
mod index;
pub mod literal;
pub mod rgcn;
mod table;
pub mod transe;
pub mod walks;

pub use cbow::{rdf2vec_train, Rdf2VecConfig, Rdf2VecModel};
pub use export::{Checkpoint, CheckpointParam, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use index::GraphIndex;
pub use literal::{encode_literal, LiteralEncoder};
pub use rgcn::{rgcn_train, Rgcn, RgcnConfig, RgcnModel};
pub use table::EmbeddingTable;
pub use transe::{transe_loss, transe_score, transe_train, TransEConfig, TransEModel};
pub use walks::{random_walks, WalkConfig};

use thiserror::Error;

use crate::grad::GradError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("no embedding for `{0}`")]
    MissingEmbedding(String),
    #[error("invalid usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Grad(#[from] GradError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
