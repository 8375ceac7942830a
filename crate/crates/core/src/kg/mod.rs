//! Knowledge-graph materialization of patient records.
//!
//! Two templates are supported. The SPHN-style template hangs features
//! directly off the patient node; the CARE-SM*-style template routes every
//! feature through a role context and an observation node, with generic
//! predicates. On top of the SPHN template the time-modelling variants add
//! event timestamps and/or `time:before` edges, optionally saturated by the
//! transitivity rule.

mod caresm;
mod cohort;
mod quantile;
mod rules;
mod sphn;
pub mod vocab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use caresm::build_caresm_graph;
pub use cohort::{build_cohort_graph, build_cohort_graph_with, tag_roles, CohortGraph, PatientEntry, Sidecar, SplitTag};
pub use quantile::quantile_transform;
pub use rules::{add_inverses, saturate, saturate_to_fixpoint};
pub use sphn::build_patient_graph;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KgError {
    #[error("time:before edges contain a cycle through <{0}>")]
    CyclicTime(String),
    #[error("{0}")]
    Argument(String),
    #[error("unknown graph variant `{0}`")]
    UnknownVariant(String),
}

/// The eight graph flavours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SchemaVariant {
    /// No literals at all.
    SphnNl,
    /// Feature literals, no time information.
    SphnNt,
    /// Event timestamps.
    SphnTs,
    /// `time:before` between direct successors.
    SphnTr,
    /// Timestamps and `time:before`.
    SphnTsr,
    /// `SphnTr` with one transitivity round.
    SphnSat1,
    /// `SphnTr` with two transitivity rounds.
    SphnSat2,
    /// CARE-SM*-style template with timestamps on contexts.
    CaresmTs,
}

impl SchemaVariant {
    pub const ALL: [SchemaVariant; 8] = [
        SchemaVariant::SphnNl,
        SchemaVariant::SphnNt,
        SchemaVariant::SphnTs,
        SchemaVariant::SphnTr,
        SchemaVariant::SphnTsr,
        SchemaVariant::SphnSat1,
        SchemaVariant::SphnSat2,
        SchemaVariant::CaresmTs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemaVariant::SphnNl => "SPHN-nl",
            SchemaVariant::SphnNt => "SPHN-nt",
            SchemaVariant::SphnTs => "SPHN-ts",
            SchemaVariant::SphnTr => "SPHN-tr",
            SchemaVariant::SphnTsr => "SPHN-tsr",
            SchemaVariant::SphnSat1 => "SPHN-sat1",
            SchemaVariant::SphnSat2 => "SPHN-sat2",
            SchemaVariant::CaresmTs => "CARESM*-ts",
        }
    }

    /// File stem used for `.nt` outputs.
    pub fn file_stem(self) -> &'static str {
        match self {
            SchemaVariant::SphnNl => "sphn-nl",
            SchemaVariant::SphnNt => "sphn-nt",
            SchemaVariant::SphnTs => "sphn-ts",
            SchemaVariant::SphnTr => "sphn-tr",
            SchemaVariant::SphnTsr => "sphn-tsr",
            SchemaVariant::SphnSat1 => "sphn-sat1",
            SchemaVariant::SphnSat2 => "sphn-sat2",
            SchemaVariant::CaresmTs => "caresm-ts",
        }
    }

    pub fn has_literals(self) -> bool {
        self != SchemaVariant::SphnNl
    }

    pub fn has_timestamps(self) -> bool {
        matches!(self, SchemaVariant::SphnTs | SchemaVariant::SphnTsr | SchemaVariant::CaresmTs)
    }

    pub fn has_before_edges(self) -> bool {
        matches!(
            self,
            SchemaVariant::SphnTr | SchemaVariant::SphnTsr | SchemaVariant::SphnSat1 | SchemaVariant::SphnSat2
        )
    }

    pub fn saturation_rounds(self) -> usize {
        match self {
            SchemaVariant::SphnSat1 => 1,
            SchemaVariant::SphnSat2 => 2,
            _ => 0,
        }
    }
}

impl fmt::Display for SchemaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemaVariant {
    type Err = KgError;

    /// Accepts display names and file stems, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('*', "").replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|v| v.file_stem() == norm)
            .ok_or_else(|| KgError::UnknownVariant(s.to_string()))
    }
}

impl TryFrom<String> for SchemaVariant {
    type Error = KgError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SchemaVariant> for String {
    fn from(v: SchemaVariant) -> Self {
        v.name().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_parse() {
        for v in SchemaVariant::ALL {
            assert_eq!(v.name().parse::<SchemaVariant>().unwrap(), v);
            assert_eq!(v.file_stem().parse::<SchemaVariant>().unwrap(), v);
        }
        assert_eq!("CARESM-ts".parse::<SchemaVariant>().unwrap(), SchemaVariant::CaresmTs);
        assert!("SPHN-xx".parse::<SchemaVariant>().is_err());
    }
}
