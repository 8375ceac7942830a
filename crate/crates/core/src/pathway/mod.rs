//! Synthetic intracranial-aneurysm care pathways.
//!
//! A [`CohortConfig`] declares per-feature marginal distributions with optional
//! monotone links between features, a first-order transition matrix over the
//! eight care events, exponential inter-event gaps and an outcome model.
//! [`generate_cohort`] turns it into [`PatientRecord`]s; [`ks_statistic`]
//! checks generated marginals against their configured distributions.
//!
//! Feature dependencies use a Gaussian copula. Every non-event feature has a
//! standard-normal latent `z`; a feature linked to `other` with coefficient
//! `ρ` draws `z = ρ·z_other + √(1-ρ²)·ε`, and its value is `F⁻¹(Φ(z))`. Each
//! marginal is therefore exactly the configured family, whatever the links.

mod config;
mod csv;
mod distribution;
mod events;
mod flows;
mod generate;
mod ks;

pub use self::csv::{read_cohort_csv, write_cohort_csv, cohort_csv_header};
pub use config::{
    CohortConfig, EventEffect, EventTimeModel, FeatureEffect, FeatureKind, FeatureSpec, Link,
    OutcomeModel, RateOverride,
};
pub use distribution::Distribution;
pub use events::{
    binarize_transitions, transition_pairs, Event, EventKind, State, TransitionMatrix,
};
pub use flows::{transition_flows, write_flows_csv, Flow};
pub use generate::{
    calibrate_intercepts, generate_cohort, generate_cohort_with, sample_event_sequence,
    FeatureValue, Outcome, PatientRecord,
};
pub use ks::{ks_critical_value, ks_statistic, ks_test};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PathwayError {
    #[error("invalid cohort configuration at `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("care pathway exceeded {limit} steps without reaching END")]
    WalkTooLong { limit: usize },
    #[error("{0}")]
    Argument(String),
    #[error("cohort CSV row {row}: {reason}")]
    Format { row: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] ::csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PathwayError {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        PathwayError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
