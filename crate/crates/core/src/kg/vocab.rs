//! IRIs used by the graph templates.
//!
//! Instance data lives under a repo-owned namespace with skolem IRIs, so no
//! blank nodes are ever produced.

use crate::pathway::{Event, EventKind};
use crate::rdf::Term;

pub const BASE: &str = "http://carekg.example/";
pub const SPHN: &str = "https://biomedit.ch/rdf/sphn-ontology/sphn#";
pub const CARESM: &str = "https://w3id.org/care-sm#";
pub const NVASC: &str = "http://carekg.example/nvasc#";
pub const TIME_BEFORE: &str = "http://www.w3.org/2006/time#before";
pub const INVERSE_SUFFIX: &str = "-inv";

fn iri(s: String) -> Term {
    Term::Iri(s)
}

pub fn patient(id: &str) -> Term {
    iri(format!("{BASE}patient/{id}"))
}

pub fn event_node(patient_id: &str, event: Event) -> Term {
    iri(format!("{BASE}patient/{patient_id}/event/{event}"))
}

pub fn context_node(patient_id: &str, item: &str) -> Term {
    iri(format!("{BASE}patient/{patient_id}/context/{item}"))
}

pub fn observation_node(patient_id: &str, item: &str) -> Term {
    iri(format!("{BASE}patient/{patient_id}/observation/{item}"))
}

/// Shared value concept `concept:<feature>=<value>`.
pub fn value_concept(feature: &str, value: &str) -> Term {
    iri(format!("{BASE}concept/{feature}={value}"))
}

/// Shared concept naming a measured attribute.
pub fn attribute_concept(feature: &str) -> Term {
    iri(format!("{BASE}concept/{feature}"))
}

pub fn event_concept(event: Event) -> Term {
    value_concept("event", event.name())
}

pub fn sphn(local: &str) -> Term {
    iri(format!("{SPHN}{local}"))
}

pub fn caresm(local: &str) -> Term {
    iri(format!("{CARESM}{local}"))
}

pub fn has_feature(feature: &str) -> Term {
    sphn(&format!("has_{feature}"))
}

pub fn rdf_type() -> Term {
    iri(crate::rdf::vocab::RDF_TYPE.to_string())
}

pub fn time_before() -> Term {
    iri(TIME_BEFORE.to_string())
}

pub fn has_timepoint() -> Term {
    iri(format!("{NVASC}hasTimePoint"))
}

pub fn event_link(event: Event) -> Term {
    match event.kind() {
        EventKind::DrugAdministration => sphn("hasDrugAdministration"),
        EventKind::MedicalProcedure => sphn("hasMedicalProcedure"),
    }
}

pub fn event_class(event: Event) -> Term {
    match event.kind() {
        EventKind::DrugAdministration => sphn("DrugAdministration"),
        EventKind::MedicalProcedure => sphn("MedicalProcedure"),
    }
}

pub fn is_inverse(predicate: &str) -> bool {
    predicate.ends_with(INVERSE_SUFFIX)
}

pub fn inverse(predicate: &str) -> Term {
    iri(format!("{predicate}{INVERSE_SUFFIX}"))
}
