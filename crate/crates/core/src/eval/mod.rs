//! Splits, metrics and the experiment runner.
//!
//! An [`ExperimentSpec`] lists table cells (a model on a representation) and
//! a repetition count. Repetition `r` draws a fresh stratified split and
//! fresh model initialisations from seed `seed + r`; every cell is evaluated
//! on the test patients of that split.

mod experiment;
pub mod metrics;
mod report;
mod split;

pub use experiment::{Cell, ExperimentSpec, ModelKind, ModelSettings, RgcnSettings, RunMetrics, RunRecord, Runner};
pub use metrics::{auc_ovr_macro, binary_auc, f1_scores, macro_f1, F1Scores};
pub use report::{write_metrics_csv, CellSummary, ExperimentSummary, MetricStats, Summary, METRICS_HEADER};
pub use split::{make_split, Split};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("model: {0}")]
    Model(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
