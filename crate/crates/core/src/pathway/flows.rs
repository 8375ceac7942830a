//! Observed care-event transitions of a cohort, for Sankey-style plots.

use std::io::Write;

use super::{PathwayError, PatientRecord, State, TransitionMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flow {
    pub source: State,
    pub target: State,
    /// Number of patients that took this transition, i.e. the observed
    /// per-patient transition frequency times the cohort size.
    pub weight: f64,
}

/// Flows along every observed sequence `START → e1 → ... → END`, one row for
/// each pair that was observed or has positive probability in `matrix`, in
/// state order. Unobserved pairs keep weight 0; END has no outgoing flows.
pub fn transition_flows(cohort: &[PatientRecord], matrix: &TransitionMatrix) -> Vec<Flow> {
    let mut counts = [[0usize; State::COUNT]; State::COUNT];
    for p in cohort {
        let mut at = State::Start;
        for &(e, _) in &p.events {
            counts[at.index()][State::Event(e).index()] += 1;
            at = State::Event(e);
        }
        counts[at.index()][State::End.index()] += 1;
    }
    let mut flows = Vec::new();
    for source in State::all().filter(|&s| s != State::End) {
        for target in State::all() {
            let c = counts[source.index()][target.index()];
            if c > 0 || matrix.prob(source, target) > 0.0 {
                flows.push(Flow {
                    source,
                    target,
                    weight: c as f64,
                });
            }
        }
    }
    flows
}

/// CSV with header `source,target,weight`.
pub fn write_flows_csv<W: Write>(flows: &[Flow], out: W) -> Result<(), PathwayError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["source", "target", "weight"])?;
    for f in flows {
        w.write_record([f.source.name(), f.target.name(), &f.weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
