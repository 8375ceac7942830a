use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::quantile::quantile_transform;
use super::rules::add_inverses;
use super::{caresm, sphn, vocab, KgError, SchemaVariant};
use crate::exec::Execution;
use crate::pathway::{Event, Outcome, PatientRecord};
use crate::rdf::{Graph, NodeRole, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Validation,
    Test,
}

/// Side metadata of one patient node. The outcome never enters the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientEntry {
    pub id: String,
    pub iri: String,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitTag>,
}

/// Sidecar JSON written next to each `.nt` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub variant: SchemaVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_seed: Option<u64>,
    pub patients: Vec<PatientEntry>,
}

#[derive(Debug, Clone)]
pub struct CohortGraph {
    pub variant: SchemaVariant,
    pub graph: Graph,
    /// In cohort order.
    pub patients: Vec<PatientEntry>,
}

impl CohortGraph {
    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            variant: self.variant,
            split_seed: None,
            patients: self.patients.clone(),
        }
    }
}

/// Per-event cohort-wide quantiles of the event times, aligned with each
/// record's event list.
fn quantile_times(cohort: &[PatientRecord]) -> Result<Vec<Vec<(Event, f64)>>, KgError> {
    let mut columns: HashMap<Event, Vec<(usize, usize, f64)>> = HashMap::new();
    for (i, r) in cohort.iter().enumerate() {
        for (k, &(e, t)) in r.events.iter().enumerate() {
            columns.entry(e).or_default().push((i, k, t));
        }
    }
    let mut out: Vec<Vec<(Event, f64)>> = cohort.iter().map(|r| r.events.clone()).collect();
    for (e, col) in columns {
        let values: Vec<f64> = col.iter().map(|c| c.2).collect();
        for (&(i, k, _), q) in col.iter().zip(quantile_transform(&values)?) {
            out[i][k] = (e, q);
        }
    }
    Ok(out)
}

pub fn build_cohort_graph(cohort: &[PatientRecord], variant: SchemaVariant) -> Result<CohortGraph, KgError> {
    build_cohort_graph_with(cohort, variant, true, Execution::default())
}

/// Union of the per-patient graphs of `cohort`, timestamps replaced by their
/// cohort-wide per-event quantiles, optionally with inverse edges.
pub fn build_cohort_graph_with(
    cohort: &[PatientRecord],
    variant: SchemaVariant,
    inverses: bool,
    exec: Execution,
) -> Result<CohortGraph, KgError> {
    let times = quantile_times(cohort)?;
    let parts = exec.map(cohort.len(), |i| match variant {
        SchemaVariant::CaresmTs => caresm::build_caresm(&cohort[i], &times[i]),
        v => sphn::build_sphn(&cohort[i], v, &times[i]),
    });
    let mut graph = Graph::new();
    for part in &parts {
        graph.extend_from(part);
    }
    drop(parts);
    if inverses {
        graph = add_inverses(&graph);
    }
    let patients = cohort
        .iter()
        .map(|r| PatientEntry {
            id: r.id.clone(),
            iri: vocab::patient(&r.id).as_iri().expect("IRI").to_string(),
            outcome: r.outcome,
            split: None,
        })
        .collect();
    Ok(CohortGraph {
        variant,
        graph,
        patients,
    })
}

/// Restores node roles on a graph read back from N-Triples, from the IRI
/// layout of the templates.
pub fn tag_roles(graph: &mut Graph) {
    let patient_prefix = format!("{}patient/", vocab::BASE);
    let concept_prefix = format!("{}concept/", vocab::BASE);
    let type_objects: Vec<Term> = graph
        .with_predicate(&vocab::rdf_type())
        .into_iter()
        .map(|t| graph.term(t[2]).clone())
        .collect();
    for t in type_objects {
        graph.set_role(&t, NodeRole::Class);
    }
    let nodes: Vec<Term> = graph.nodes().into_iter().map(|id| graph.term(id).clone()).collect();
    for t in nodes {
        let Some(iri) = t.as_iri() else { continue };
        let role = if let Some(rest) = iri.strip_prefix(&patient_prefix) {
            if rest.contains("/event/") {
                NodeRole::Event
            } else if rest.contains("/context/") {
                NodeRole::Context
            } else if rest.contains("/observation/") {
                NodeRole::Observation
            } else {
                NodeRole::Patient
            }
        } else if iri.starts_with(&concept_prefix) {
            NodeRole::Concept
        } else {
            continue;
        };
        graph.set_role(&t, role);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathway::{generate_cohort, CohortConfig};
    use crate::rdf::{parse_ntriples, serialize_ntriples};

    fn cohort(n: usize) -> Vec<PatientRecord> {
        let mut c = CohortConfig::default_config();
        c.n_patients = n;
        c.outcome.calibration_sample = 500;
        generate_cohort(&c).unwrap()
    }

    #[test]
    fn timestamps_are_quantiles() {
        let cohort = cohort(80);
        for v in [SchemaVariant::SphnTs, SchemaVariant::SphnTsr, SchemaVariant::CaresmTs] {
            let cg = build_cohort_graph(&cohort, v).unwrap();
            let mut any = false;
            for (_, p, o) in cg.graph.iter() {
                let pi = p.as_iri().unwrap();
                if pi.ends_with("hasStartDateTime") || pi.ends_with("hasTimePoint") {
                    let q = o.as_literal().unwrap().as_f64().unwrap();
                    assert!((0.0..=1.0).contains(&q));
                    any = true;
                }
            }
            assert!(any);
        }
    }

    #[test]
    fn no_outcome_leaks_into_graphs() {
        let cohort = cohort(40);
        for v in SchemaVariant::ALL {
            let cg = build_cohort_graph(&cohort, v).unwrap();
            for (s, p, o) in cg.graph.iter() {
                for t in [s, p, o] {
                    let text = t.to_string();
                    for out in Outcome::ALL {
                        assert!(!text.contains(out.name()), "{text}");
                    }
                }
            }
        }
    }

    #[test]
    fn sequential_and_parallel_agree_and_roles_survive_io() {
        let cohort = cohort(30);
        let a = build_cohort_graph_with(&cohort, SchemaVariant::SphnTsr, true, Execution::Sequential).unwrap();
        let b = build_cohort_graph_with(&cohort, SchemaVariant::SphnTsr, true, Execution::Parallel).unwrap();
        let text = serialize_ntriples(&a.graph);
        assert_eq!(text, serialize_ntriples(&b.graph));
        let mut back = parse_ntriples(&text).unwrap();
        tag_roles(&mut back);
        for id in a.graph.nodes() {
            let t = a.graph.term(id);
            assert_eq!(back.role_of(t), Some(a.graph.role(id)), "{t}");
        }
    }

    #[test]
    fn sidecar_round_trips() {
        let cg = build_cohort_graph(&cohort(5), SchemaVariant::SphnNl).unwrap();
        let json = serde_json::to_string(&cg.sidecar()).unwrap();
        let back: Sidecar = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cg.sidecar());
        assert!(json.contains("SPHN-nl"));
    }
}
