use std::io::{Read, Write};

use super::config::{CohortConfig, FeatureKind};
use super::events::{binarize_transitions, transition_pairs, Event};
use super::generate::{FeatureValue, Outcome, PatientRecord};
use super::PathwayError;

/// Header: `id`, features in configuration order, one time column per event,
/// the 56 `trans_<a>_<b>` indicators and `outcome`.
pub fn cohort_csv_header(config: &CohortConfig) -> Vec<String> {
    let mut h = vec!["id".to_string()];
    h.extend(config.features.iter().map(|f| f.name.clone()));
    h.extend(Event::ALL.iter().map(|e| e.name().to_string()));
    h.extend(transition_pairs().iter().map(|(a, b)| format!("trans_{a}_{b}")));
    h.push("outcome".into());
    h
}

pub fn write_cohort_csv<W: Write>(
    out: W,
    config: &CohortConfig,
    cohort: &[PatientRecord],
) -> Result<(), PathwayError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(cohort_csv_header(config))?;
    for p in cohort {
        let mut row = Vec::with_capacity(88);
        row.push(p.id.clone());
        for f in &config.features {
            let v = p.feature(&f.name).ok_or_else(|| PathwayError::Format {
                row: 0,
                reason: format!("patient {} lacks feature `{}`", p.id, f.name),
            })?;
            row.push(v.to_string());
        }
        for e in Event::ALL {
            row.push(p.event_time(e).map(|t| t.to_string()).unwrap_or_default());
        }
        row.extend(binarize_transitions(&p.events).values().map(|v| v.to_string()));
        row.push(p.outcome.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cohort_csv<R: Read>(input: R, config: &CohortConfig) -> Result<Vec<PatientRecord>, PathwayError> {
    let mut r = csv::Reader::from_reader(input);
    let expected = cohort_csv_header(config);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != expected {
        return Err(PathwayError::Format {
            row: 0,
            reason: "header does not match the cohort configuration".into(),
        });
    }
    let nf = config.features.len();
    let pairs = transition_pairs();
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let bad = |reason: String| PathwayError::Format { row, reason };
        let mut features = Vec::with_capacity(nf);
        for (j, f) in config.features.iter().enumerate() {
            let cell = &rec[1 + j];
            let v = match f.kind {
                FeatureKind::Numeric => FeatureValue::Numeric(
                    cell.parse().map_err(|_| bad(format!("`{}` is not a number: `{cell}`", f.name)))?,
                ),
                FeatureKind::Binary => match cell {
                    "0" => FeatureValue::Binary(false),
                    "1" => FeatureValue::Binary(true),
                    _ => return Err(bad(format!("`{}` must be 0 or 1, got `{cell}`", f.name))),
                },
                FeatureKind::Categorical => {
                    if !f.categories().iter().any(|c| c == cell) {
                        return Err(bad(format!("`{cell}` is not a category of `{}`", f.name)));
                    }
                    FeatureValue::Category(cell.to_string())
                }
            };
            features.push((f.name.clone(), v));
        }
        let mut events = Vec::new();
        for (k, e) in Event::ALL.iter().enumerate() {
            let cell = &rec[1 + nf + k];
            if !cell.is_empty() {
                let t: f64 = cell.parse().map_err(|_| bad(format!("bad time for {e}: `{cell}`")))?;
                if !(t.is_finite() && t >= 0.0) {
                    return Err(bad(format!("time for {e} must be finite and >= 0")));
                }
                events.push((*e, t));
            }
        }
        events.sort_by(|a, b| a.1.total_cmp(&b.1));
        if events.windows(2).any(|w| w[0].1 == w[1].1) {
            return Err(bad("event times must be strictly increasing".into()));
        }
        let derived = binarize_transitions(&events);
        for (k, pair) in pairs.iter().enumerate() {
            let cell = &rec[1 + nf + 8 + k];
            if cell != derived[pair].to_string() {
                return Err(bad(format!("transition column trans_{}_{} disagrees with event times", pair.0, pair.1)));
            }
        }
        let outcome: Outcome = rec[1 + nf + 8 + pairs.len()].parse().map_err(bad)?;
        out.push(PatientRecord {
            id: rec[0].to_string(),
            features,
            events,
            outcome,
        });
    }
    Ok(out)
}
