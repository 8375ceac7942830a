use super::sphn::feature_object;
use super::vocab;
use crate::pathway::{Event, FeatureValue, PatientRecord};
use crate::rdf::{Graph, Literal, NodeRole, Term};

/// Adds `patient → context → observation → concept` and returns the observation.
fn chain(g: &mut Graph, record: &PatientRecord, patient: &Term, item: &str, concept: &Term) -> (Term, Term) {
    let ctx = vocab::context_node(&record.id, item);
    let obs = vocab::observation_node(&record.id, item);
    g.set_role(&ctx, NodeRole::Context);
    g.set_role(&obs, NodeRole::Observation);
    g.set_role(concept, NodeRole::Concept);
    g.add(patient, &vocab::caresm("hasRole"), &ctx);
    g.add(&ctx, &vocab::caresm("hasOutput"), &obs);
    g.add(&obs, &vocab::caresm("refersTo"), concept);
    (ctx, obs)
}

pub(crate) fn build_caresm(record: &PatientRecord, times: &[(Event, f64)]) -> Graph {
    let mut g = Graph::new();
    let patient = vocab::patient(&record.id);
    g.set_role(&patient, NodeRole::Patient);
    let class = vocab::caresm("Patient");
    g.set_role(&class, NodeRole::Class);
    g.add(&patient, &vocab::rdf_type(), &class);

    for (name, value) in &record.features {
        match value {
            FeatureValue::Numeric(v) => {
                let concept = vocab::attribute_concept(name);
                let (_, obs) = chain(&mut g, record, &patient, name, &concept);
                g.add(&obs, &vocab::caresm("hasValue"), &Term::Literal(Literal::decimal(*v)));
            }
            other => {
                let concept = feature_object(&mut g, name, other);
                chain(&mut g, record, &patient, name, &concept);
            }
        }
    }
    for (k, &(event, _)) in record.events.iter().enumerate() {
        let concept = vocab::event_concept(event);
        let (ctx, _) = chain(&mut g, record, &patient, event.name(), &concept);
        g.add(&ctx, &vocab::has_timepoint(), &Term::Literal(Literal::decimal(times[k].1)));
    }
    g
}

/// CARE-SM*-style graph with timestamps, in hours from admission.
///
/// Every feature and event is reached from the patient in exactly three
/// object-property hops. Literal values sit on observation nodes and event
/// timestamps on their context nodes.
pub fn build_caresm_graph(record: &PatientRecord) -> Graph {
    build_caresm(record, &record.events)
}
