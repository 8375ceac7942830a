//! `metrics.csv` and `summary.json`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::experiment::{RunMetrics, RunRecord};
use super::EvalError;

pub const METRICS_HEADER: [&str; 11] = [
    "experiment",
    "model",
    "kg_variant",
    "repetition",
    "f1_backhome",
    "f1_rehab",
    "f1_death",
    "f1_macro",
    "f1_weighted",
    "accuracy",
    "auc",
];

/// One line per run; metric values are written with six decimals.
pub fn write_metrics_csv<W: Write>(records: &[RunRecord], out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in records {
        let mut row = vec![r.experiment.clone(), r.model.clone(), r.kg_variant.clone(), r.repetition.to_string()];
        row.extend(r.metrics.values().iter().map(|v| format!("{v:.6}")));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Mean and sample standard deviation of each metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub f1_backhome: f64,
    pub f1_rehab: f64,
    pub f1_death: f64,
    pub f1_macro: f64,
    pub f1_weighted: f64,
    pub accuracy: f64,
    pub auc: f64,
}

impl MetricStats {
    fn from_values(v: [f64; 7]) -> Self {
        MetricStats {
            f1_backhome: v[0],
            f1_rehab: v[1],
            f1_death: v[2],
            f1_macro: v[3],
            f1_weighted: v[4],
            accuracy: v[5],
            auc: v[6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub model: String,
    pub kg_variant: String,
    pub runs: usize,
    pub mean: MetricStats,
    pub std: MetricStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub seeds: Vec<u64>,
    pub cells: Vec<CellSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiments: Vec<ExperimentSummary>,
}

impl Summary {
    /// Groups `records` by experiment and then by (model, variant), keeping
    /// first-seen order.
    pub fn from_records(records: &[RunRecord]) -> Self {
        let mut experiments: Vec<ExperimentSummary> = Vec::new();
        let mut groups: Vec<(String, String, String, Vec<RunMetrics>, Vec<u64>)> = Vec::new();
        for r in records {
            match groups
                .iter_mut()
                .find(|g| g.0 == r.experiment && g.1 == r.model && g.2 == r.kg_variant)
            {
                Some(g) => {
                    g.3.push(r.metrics);
                    g.4.push(r.seed);
                }
                None => groups.push((r.experiment.clone(), r.model.clone(), r.kg_variant.clone(), vec![r.metrics], vec![r.seed])),
            }
        }
        for (exp, model, variant, runs, seeds) in groups {
            let cell = summarize(model, variant, &runs);
            match experiments.iter_mut().find(|e| e.name == exp) {
                Some(e) => {
                    for s in seeds {
                        if !e.seeds.contains(&s) {
                            e.seeds.push(s);
                        }
                    }
                    e.cells.push(cell);
                }
                None => experiments.push(ExperimentSummary {
                    name: exp,
                    seeds,
                    cells: vec![cell],
                }),
            }
        }
        Summary { experiments }
    }

    pub fn cell(&self, experiment: &str, model: &str, kg_variant: &str) -> Option<&CellSummary> {
        self.experiments
            .iter()
            .find(|e| e.name == experiment)?
            .cells
            .iter()
            .find(|c| c.model == model && c.kg_variant == kg_variant)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serialises")
    }
}

fn summarize(model: String, kg_variant: String, runs: &[RunMetrics]) -> CellSummary {
    let n = runs.len();
    let mut mean = [0.0; 7];
    for r in runs {
        for (m, v) in mean.iter_mut().zip(r.values()) {
            *m += v / n as f64;
        }
    }
    let mut std = [0.0; 7];
    if n > 1 {
        for r in runs {
            for ((s, v), m) in std.iter_mut().zip(r.values()).zip(mean) {
                *s += (v - m) * (v - m) / (n - 1) as f64;
            }
        }
        std.iter_mut().for_each(|s| *s = s.sqrt());
    }
    CellSummary {
        model,
        kg_variant,
        runs: n,
        mean: MetricStats::from_values(mean),
        std: MetricStats::from_values(std),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(exp: &str, model: &str, rep: usize, auc: f64) -> RunRecord {
        RunRecord {
            experiment: exp.into(),
            model: model.into(),
            kg_variant: "tabular".into(),
            repetition: rep,
            seed: 10 + rep as u64,
            metrics: RunMetrics {
                f1_backhome: 0.5,
                f1_rehab: 0.25,
                f1_death: 0.0,
                f1_macro: 0.25,
                f1_weighted: 0.3,
                accuracy: 0.4,
                auc,
            },
        }
    }

    #[test]
    fn csv_and_summary() {
        let recs = vec![record("t", "LR", 0, 0.6), record("t", "LR", 1, 0.8), record("t", "RF", 0, 0.7)];
        let mut buf = Vec::new();
        write_metrics_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], METRICS_HEADER.join(","));
        assert_eq!(lines[1], "t,LR,tabular,0,0.500000,0.250000,0.000000,0.250000,0.300000,0.400000,0.600000");
        let s = Summary::from_records(&recs);
        let lr = s.cell("t", "LR", "tabular").unwrap();
        assert!((lr.mean.auc - 0.7).abs() < 1e-12);
        assert!((lr.std.auc - 0.02f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.cell("t", "RF", "tabular").unwrap().std.auc, 0.0);
        assert_eq!(s.experiments[0].seeds, vec![10, 11]);
    }
}
