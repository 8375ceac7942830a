use crate::grad::Matrix;
use crate::pathway::{transition_pairs, CohortConfig, Event, FeatureKind, FeatureValue, PatientRecord};

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnEncoding {
    /// Standardised with training-split mean and standard deviation.
    Numeric { mean: f64, sd: f64 },
    OneHot { category: String },
    Binary,
    /// 1 when `from` is directly followed by `to`.
    Transition { from: Event, to: Event },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularColumn {
    pub source: String,
    pub encoding: ColumnEncoding,
}

impl TabularColumn {
    pub fn name(&self) -> String {
        match &self.encoding {
            ColumnEncoding::OneHot { category } => format!("{}={}", self.source, category),
            _ => self.source.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TabularMatrix {
    pub x: Matrix,
    pub columns: Vec<TabularColumn>,
    pub labels: Vec<usize>,
    /// Categorical values outside the declared categories, encoded as an
    /// all-zero group.
    pub unseen_categories: usize,
}

/// Column layout fitted on a training split.
///
/// Numeric statistics come from the fitting records only; [`encode`] never
/// updates them.
///
/// [`encode`]: TabularEncoder::encode
#[derive(Debug, Clone, PartialEq)]
pub struct TabularEncoder {
    columns: Vec<TabularColumn>,
}

impl TabularEncoder {
    /// Fits numeric statistics on `train`. Event timestamps are not encoded;
    /// the pathway enters only through the 56 transition indicators.
    pub fn fit<'a>(config: &CohortConfig, train: impl IntoIterator<Item = &'a PatientRecord>) -> Self {
        let train: Vec<&PatientRecord> = train.into_iter().collect();
        let mut columns = Vec::new();
        for spec in &config.features {
            match spec.kind {
                FeatureKind::Numeric => {
                    let vals: Vec<f64> = train
                        .iter()
                        .filter_map(|r| match r.feature(&spec.name) {
                            Some(FeatureValue::Numeric(v)) => Some(*v),
                            _ => None,
                        })
                        .collect();
                    let n = vals.len().max(1) as f64;
                    let mean = vals.iter().sum::<f64>() / n;
                    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                    let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
                    columns.push(TabularColumn {
                        source: spec.name.clone(),
                        encoding: ColumnEncoding::Numeric { mean, sd },
                    });
                }
                FeatureKind::Categorical => {
                    for category in spec.categories() {
                        columns.push(TabularColumn {
                            source: spec.name.clone(),
                            encoding: ColumnEncoding::OneHot { category },
                        });
                    }
                }
                FeatureKind::Binary => columns.push(TabularColumn {
                    source: spec.name.clone(),
                    encoding: ColumnEncoding::Binary,
                }),
            }
        }
        for (from, to) in transition_pairs() {
            columns.push(TabularColumn {
                source: format!("trans_{}_{}", from.name(), to.name()),
                encoding: ColumnEncoding::Transition { from, to },
            });
        }
        TabularEncoder { columns }
    }

    pub fn columns(&self) -> &[TabularColumn] {
        &self.columns
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn encode<'a>(&self, records: impl IntoIterator<Item = &'a PatientRecord>) -> TabularMatrix {
        let records: Vec<&PatientRecord> = records.into_iter().collect();
        let mut x = Matrix::zeros(records.len(), self.columns.len());
        let mut unseen = 0;
        let mut groups: Vec<(&str, Vec<usize>)> = Vec::new();
        for (j, col) in self.columns.iter().enumerate() {
            if let ColumnEncoding::OneHot { .. } = col.encoding {
                match groups.last_mut() {
                    Some((src, cols)) if *src == col.source => cols.push(j),
                    _ => groups.push((&col.source, vec![j])),
                }
            }
        }
        for (i, r) in records.iter().enumerate() {
            let pairs: Vec<(Event, Event)> = r.events.windows(2).map(|w| (w[0].0, w[1].0)).collect();
            for (j, col) in self.columns.iter().enumerate() {
                let v = match &col.encoding {
                    ColumnEncoding::Numeric { mean, sd } => match r.feature(&col.source) {
                        Some(FeatureValue::Numeric(v)) => (v - mean) / sd,
                        _ => 0.0,
                    },
                    ColumnEncoding::OneHot { category } => {
                        let hit = matches!(r.feature(&col.source), Some(FeatureValue::Category(c)) if c == category);
                        f64::from(u8::from(hit))
                    }
                    ColumnEncoding::Binary => match r.feature(&col.source) {
                        Some(FeatureValue::Binary(true)) => 1.0,
                        _ => 0.0,
                    },
                    ColumnEncoding::Transition { from, to } => f64::from(u8::from(pairs.contains(&(*from, *to)))),
                };
                x.set(i, j, v);
            }
            for (_, cols) in &groups {
                if cols.iter().all(|&j| x.get(i, j) == 0.0) {
                    unseen += 1;
                }
            }
        }
        TabularMatrix {
            x,
            columns: self.columns.clone(),
            labels: records.iter().map(|r| r.outcome.index()).collect(),
            unseen_categories: unseen,
        }
    }
}

/// Encodes `rows` of `cohort` with statistics fitted on its `train` rows.
pub fn encode_tabular(config: &CohortConfig, cohort: &[PatientRecord], train: &[usize], rows: &[usize]) -> TabularMatrix {
    let enc = TabularEncoder::fit(config, train.iter().map(|&i| &cohort[i]));
    enc.encode(rows.iter().map(|&i| &cohort[i]))
}
