use super::rules::saturate;
use super::vocab;
use super::SchemaVariant;
use crate::pathway::{Event, FeatureValue, PatientRecord};
use crate::rdf::{Graph, Literal, NodeRole, Term};

pub(crate) fn feature_object(graph: &mut Graph, feature: &str, value: &FeatureValue) -> Term {
    match value {
        FeatureValue::Numeric(v) => Term::Literal(Literal::decimal(*v)),
        FeatureValue::Category(c) => {
            let t = vocab::value_concept(feature, c);
            graph.set_role(&t, NodeRole::Concept);
            t
        }
        FeatureValue::Binary(b) => {
            let t = vocab::value_concept(feature, if *b { "1" } else { "0" });
            graph.set_role(&t, NodeRole::Concept);
            t
        }
    }
}

/// SPHN-style graph. `times` supplies the timestamp written for each event
/// (raw hours for [`build_patient_graph`], quantiles in cohort graphs).
pub(crate) fn build_sphn(record: &PatientRecord, variant: SchemaVariant, times: &[(Event, f64)]) -> Graph {
    debug_assert!(variant != SchemaVariant::CaresmTs);
    let mut g = Graph::new();
    let patient = vocab::patient(&record.id);
    g.set_role(&patient, NodeRole::Patient);
    let class = vocab::sphn("SubjectPseudoIdentifier");
    g.set_role(&class, NodeRole::Class);
    g.add(&patient, &vocab::rdf_type(), &class);

    for (name, value) in &record.features {
        if matches!(value, FeatureValue::Numeric(_)) && !variant.has_literals() {
            continue;
        }
        let object = feature_object(&mut g, name, value);
        g.add(&patient, &vocab::has_feature(name), &object);
    }

    let mut nodes = Vec::with_capacity(record.events.len());
    for (k, &(event, _)) in record.events.iter().enumerate() {
        let node = vocab::event_node(&record.id, event);
        g.set_role(&node, NodeRole::Event);
        let class = vocab::event_class(event);
        g.set_role(&class, NodeRole::Class);
        let code = vocab::event_concept(event);
        g.set_role(&code, NodeRole::Concept);
        g.add(&patient, &vocab::event_link(event), &node);
        g.add(&node, &vocab::rdf_type(), &class);
        g.add(&node, &vocab::sphn("hasCode"), &code);
        if variant.has_timestamps() {
            let t = times[k];
            debug_assert_eq!(t.0, event);
            g.add(&node, &vocab::sphn("hasStartDateTime"), &Term::Literal(Literal::decimal(t.1)));
        }
        nodes.push(node);
    }
    if variant.has_before_edges() {
        for w in nodes.windows(2) {
            g.add(&w[0], &vocab::time_before(), &w[1]);
        }
    }
    let rounds = variant.saturation_rounds();
    if rounds > 0 {
        g = saturate(&g, rounds).expect("events of one record are totally ordered");
    }
    g
}

/// Graph of one patient under `variant`, timestamps in hours from admission.
///
/// The outcome is never written into the graph.
pub fn build_patient_graph(record: &PatientRecord, variant: SchemaVariant) -> Graph {
    match variant {
        SchemaVariant::CaresmTs => super::caresm::build_caresm(record, &record.events),
        v => build_sphn(record, v, &record.events),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathway::{CohortConfig, generate_cohort};

    fn record_with_events(n: usize) -> PatientRecord {
        let mut c = CohortConfig::default_config();
        c.n_patients = 300;
        c.outcome.calibration_sample = 300;
        generate_cohort(&c)
            .unwrap()
            .into_iter()
            .find(|p| p.events.len() == n)
            .expect("record with the requested event count")
    }

    #[test]
    fn ts_with_two_events_has_31_triples() {
        let r = record_with_events(2);
        assert_eq!(build_patient_graph(&r, SchemaVariant::SphnTs).len(), 31);
    }

    #[test]
    fn variant_relations() {
        let r = record_with_events(3);
        let graph = |v| build_patient_graph(&r, v).triple_set();
        let nl = build_patient_graph(&r, SchemaVariant::SphnNl);
        assert!(nl.iter().all(|(_, _, o)| o.is_iri()));
        let nt = graph(SchemaVariant::SphnNt);
        let ts = graph(SchemaVariant::SphnTs);
        let tr = graph(SchemaVariant::SphnTr);
        let tsr = graph(SchemaVariant::SphnTsr);
        let s1 = graph(SchemaVariant::SphnSat1);
        let s2 = graph(SchemaVariant::SphnSat2);
        let stamp = vocab::sphn("hasStartDateTime");
        let ts_minus: std::collections::BTreeSet<_> =
            ts.iter().filter(|t| t.predicate != stamp).cloned().collect();
        assert_eq!(ts_minus, nt);
        assert_eq!(tsr, ts.union(&tr).cloned().collect());
        assert!(tr.is_subset(&s1) && s1.is_subset(&s2));
        let before = vocab::time_before();
        assert_eq!(tr.iter().filter(|t| t.predicate == before).count(), 2);
        assert_eq!(s1.iter().filter(|t| t.predicate == before).count(), 3);
        assert!(nt.iter().all(|t| t.predicate != before));
    }
}
