//! Experiment specifications and the repetition runner.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::{auc_ovr_macro, f1_scores};
use super::split::{make_split, Split};
use super::EvalError;
use crate::baselines::{train_logreg, train_nn, train_rf, Classifier, ForestConfig, LogRegConfig, MlpConfig, TabularEncoder};
use crate::exec::Execution;
use crate::grad::{AdamConfig, Matrix};
use crate::kg::{build_cohort_graph_with, CohortGraph, SchemaVariant};
use crate::models::{rdf2vec_train, rgcn_train, transe_train, EmbeddingTable, Rdf2VecConfig, RgcnConfig, TransEConfig};
use crate::pathway::{Outcome, PatientRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    LogReg,
    RandomForest,
    Network,
    TransE,
    Rdf2Vec,
    Rgcn { layers: usize, literals: bool },
}

impl ModelKind {
    pub fn name(&self) -> String {
        match self {
            ModelKind::LogReg => "LR".into(),
            ModelKind::RandomForest => "RF".into(),
            ModelKind::Network => "NN".into(),
            ModelKind::TransE => "TransE".into(),
            ModelKind::Rdf2Vec => "RDF2Vec".into(),
            ModelKind::Rgcn { layers, literals } => {
                format!("RGCN{layers}{}", if *literals { "+lit" } else { "" })
            }
        }
    }

    pub fn is_tabular(&self) -> bool {
        matches!(self, ModelKind::LogReg | ModelKind::RandomForest | ModelKind::Network)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ModelKind {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        let fixed = match s {
            "LR" => Some(ModelKind::LogReg),
            "RF" => Some(ModelKind::RandomForest),
            "NN" => Some(ModelKind::Network),
            "TransE" => Some(ModelKind::TransE),
            "RDF2Vec" => Some(ModelKind::Rdf2Vec),
            _ => None,
        };
        if let Some(m) = fixed {
            return Ok(m);
        }
        let unknown = || EvalError::Config(format!("unknown model `{s}`"));
        let rest = s.strip_prefix("RGCN").ok_or_else(unknown)?;
        let (digits, literals) = match rest.strip_suffix("+lit") {
            Some(d) => (d, true),
            None => (rest, false),
        };
        let layers: usize = digits.parse().map_err(|_| unknown())?;
        if layers == 0 {
            return Err(unknown());
        }
        Ok(ModelKind::Rgcn { layers, literals })
    }
}

impl Serialize for ModelKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for ModelKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One table row: a model on a representation. Tabular models take no graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub model: ModelKind,
    #[serde(default)]
    pub kg_variant: Option<SchemaVariant>,
}

impl Cell {
    pub fn variant_label(&self) -> String {
        self.kg_variant.map_or_else(|| "tabular".to_string(), |v| v.name().to_string())
    }

    fn validate(&self) -> Result<(), EvalError> {
        match (self.model.is_tabular(), self.kg_variant) {
            (true, Some(v)) => Err(EvalError::Config(format!("{} takes no graph, got {v}", self.model))),
            (false, None) => Err(EvalError::Config(format!("{} needs a kg_variant", self.model))),
            _ => Ok(()),
        }
    }
}

/// RGCN widths at experiment level; the layer count comes from the model name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RgcnSettings {
    pub input_dim: usize,
    /// Width of every hidden layer.
    pub hidden: usize,
    pub bases: usize,
    pub epochs: usize,
    pub patience: usize,
    pub adam: AdamConfig,
}

impl Default for RgcnSettings {
    fn default() -> Self {
        RgcnSettings {
            input_dim: 32,
            hidden: 32,
            bases: 4,
            epochs: 100,
            patience: 40,
            // full-batch training needs a larger step than the per-batch
            // default to converge within the epoch budget
            adam: AdamConfig {
                lr: 0.01,
                weight_decay: 0.002,
                ..AdamConfig::default()
            },
        }
    }
}

impl RgcnSettings {
    pub fn config(&self, layers: usize, literals: bool, seed: u64) -> RgcnConfig {
        RgcnConfig {
            input_dim: self.input_dim,
            hidden: vec![self.hidden; layers],
            classes: Outcome::ALL.len(),
            bases: self.bases,
            literals,
            epochs: self.epochs,
            patience: self.patience,
            adam: self.adam,
            seed,
        }
    }
}

/// Hyper-parameters of every model. Seeds inside are replaced by the
/// repetition seed at run time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSettings {
    pub logreg: LogRegConfig,
    pub forest: ForestConfig,
    pub nn: MlpConfig,
    pub transe: TransEConfig,
    pub rdf2vec: Rdf2VecConfig,
    /// Classifier on top of TransE and RDF2Vec patient embeddings.
    pub head: MlpConfig,
    pub rgcn: RgcnSettings,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            logreg: LogRegConfig::default(),
            forest: ForestConfig::default(),
            nn: MlpConfig::default(),
            transe: TransEConfig::default(),
            rdf2vec: Rdf2VecConfig::default(),
            head: MlpConfig::default(),
            rgcn: RgcnSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    /// Repetition `r` uses seed `seed + r` for its split and models.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    pub cells: Vec<Cell>,
    #[serde(default)]
    pub settings: ModelSettings,
}

fn default_repetitions() -> usize {
    10
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        let spec: ExperimentSpec = serde_json::from_str(text).map_err(|e| EvalError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.repetitions == 0 {
            return Err(EvalError::Config("repetitions must be positive".into()));
        }
        if self.cells.is_empty() {
            return Err(EvalError::Config(format!("experiment `{}` has no cells", self.name)));
        }
        self.cells.iter().try_for_each(Cell::validate)
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.repetitions as u64).map(|r| self.seed + r).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub f1_backhome: f64,
    pub f1_rehab: f64,
    pub f1_death: f64,
    pub f1_macro: f64,
    pub f1_weighted: f64,
    pub accuracy: f64,
    pub auc: f64,
}

impl RunMetrics {
    pub const NAMES: [&'static str; 7] = [
        "f1_backhome",
        "f1_rehab",
        "f1_death",
        "f1_macro",
        "f1_weighted",
        "accuracy",
        "auc",
    ];

    pub fn values(&self) -> [f64; 7] {
        [
            self.f1_backhome,
            self.f1_rehab,
            self.f1_death,
            self.f1_macro,
            self.f1_weighted,
            self.accuracy,
            self.auc,
        ]
    }

    /// Test-set metrics of class probabilities `probs` against `truth`.
    pub fn evaluate(truth: &[usize], probs: &Matrix) -> Result<Self, EvalError> {
        let pred = probs.argmax_rows();
        let f = f1_scores(truth, &pred, Outcome::ALL.len())?;
        Ok(RunMetrics {
            f1_backhome: f.per_class[0],
            f1_rehab: f.per_class[1],
            f1_death: f.per_class[2],
            f1_macro: f.macro_f1,
            f1_weighted: f.weighted_f1,
            accuracy: f.accuracy,
            auc: auc_ovr_macro(truth, probs)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub model: String,
    pub kg_variant: String,
    pub repetition: usize,
    pub seed: u64,
    pub metrics: RunMetrics,
}

type CacheKey = (String, Cell, u64);

/// Runs experiments on one cohort, building each graph variant once and
/// reusing results of identical (settings, cell, seed) runs across
/// experiments.
pub struct Runner {
    cohort: Arc<Vec<PatientRecord>>,
    config: crate::pathway::CohortConfig,
    labels: Vec<usize>,
    exec: Execution,
    graphs: Mutex<HashMap<SchemaVariant, Arc<CohortGraph>>>,
    results: Mutex<HashMap<CacheKey, RunMetrics>>,
    /// Progress lines to stderr.
    pub verbose: bool,
}

impl Runner {
    pub fn new(config: crate::pathway::CohortConfig, cohort: Vec<PatientRecord>, exec: Execution) -> Self {
        let labels = cohort.iter().map(|r| r.outcome.index()).collect();
        Runner {
            cohort: Arc::new(cohort),
            config,
            labels,
            exec,
            graphs: Mutex::new(HashMap::new()),
            results: Mutex::new(HashMap::new()),
            verbose: false,
        }
    }

    pub fn cohort(&self) -> &[PatientRecord] {
        &self.cohort
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Cohort graph of `variant` with inverse edges, built on first use.
    pub fn graph(&self, variant: SchemaVariant) -> Result<Arc<CohortGraph>, EvalError> {
        if let Some(g) = self.graphs.lock().expect("graph cache").get(&variant) {
            return Ok(g.clone());
        }
        let g = Arc::new(
            build_cohort_graph_with(&self.cohort, variant, true, self.exec).map_err(|e| EvalError::Model(e.to_string()))?,
        );
        self.graphs.lock().expect("graph cache").insert(variant, g.clone());
        Ok(g)
    }

    pub fn split(&self, seed: u64) -> Result<Split, EvalError> {
        make_split(&self.labels, seed)
    }

    /// Test-set class probabilities of one repetition.
    pub fn predict(&self, cell: &Cell, settings: &ModelSettings, seed: u64) -> Result<(Matrix, Vec<usize>), EvalError> {
        let split = self.split(seed)?;
        let truth: Vec<usize> = split.test.iter().map(|&i| self.labels[i]).collect();
        let y_train: Vec<usize> = split.train.iter().map(|&i| self.labels[i]).collect();
        let model_err = |e: &dyn fmt::Display| EvalError::Model(e.to_string());
        let probs = match cell.model {
            ModelKind::LogReg | ModelKind::RandomForest | ModelKind::Network => {
                let enc = TabularEncoder::fit(&self.config, split.train.iter().map(|&i| &self.cohort[i]));
                let xtr = enc.encode(split.train.iter().map(|&i| &self.cohort[i])).x;
                let xte = enc.encode(split.test.iter().map(|&i| &self.cohort[i])).x;
                match cell.model {
                    ModelKind::LogReg => {
                        let cfg = LogRegConfig { seed, ..settings.logreg.clone() };
                        train_logreg(&xtr, &y_train, &cfg).and_then(|m| m.predict_proba(&xte))
                    }
                    ModelKind::RandomForest => {
                        let cfg = ForestConfig { seed, ..settings.forest.clone() };
                        train_rf(&xtr, &y_train, &cfg, self.exec).and_then(|m| m.predict_proba(&xte))
                    }
                    _ => {
                        let cfg = MlpConfig { seed, ..settings.nn.clone() };
                        train_nn(&xtr, &y_train, &cfg).and_then(|m| m.predict_proba(&xte))
                    }
                }
                .map_err(|e| model_err(&e))?
            }
            ModelKind::TransE | ModelKind::Rdf2Vec => {
                let g = self.graph(cell.kg_variant.expect("validated cell"))?;
                let table = if cell.model == ModelKind::TransE {
                    let cfg = TransEConfig { seed, ..settings.transe.clone() };
                    transe_train(&g.graph, &cfg).map_err(|e| model_err(&e))?.entities
                } else {
                    let mut cfg = Rdf2VecConfig { seed, ..settings.rdf2vec.clone() };
                    cfg.walks.seed = seed;
                    rdf2vec_train(&g.graph, &cfg, self.exec).map_err(|e| model_err(&e))?.entities
                };
                let rows = |idx: &[usize]| patient_rows(&table, g.as_ref(), idx);
                let (xtr, xte) = (rows(&split.train)?, rows(&split.test)?);
                let cfg = MlpConfig { seed, ..settings.head.clone() };
                train_nn(&xtr, &y_train, &cfg)
                    .and_then(|m| m.predict_proba(&xte))
                    .map_err(|e| model_err(&e))?
            }
            ModelKind::Rgcn { layers, literals } => {
                let g = self.graph(cell.kg_variant.expect("validated cell"))?;
                let iris: Vec<String> = g.patients.iter().map(|p| p.iri.clone()).collect();
                let pairs = |idx: &[usize]| idx.iter().map(|&i| (i, self.labels[i])).collect::<Vec<_>>();
                let cfg = settings.rgcn.config(layers, literals, seed);
                let m = rgcn_train(&g.graph, &iris, &pairs(&split.train), &pairs(&split.validation), &cfg)
                    .map_err(|e| model_err(&e))?;
                m.probabilities().select_rows(&split.test)
            }
        };
        Ok((probs, truth))
    }

    /// Metrics of one repetition, from the cache when available.
    pub fn run_one(&self, cell: &Cell, settings: &ModelSettings, seed: u64) -> Result<RunMetrics, EvalError> {
        let key = (
            serde_json::to_string(settings).expect("settings serialise"),
            *cell,
            seed,
        );
        if let Some(m) = self.results.lock().expect("result cache").get(&key) {
            return Ok(*m);
        }
        let start = Instant::now();
        let (probs, truth) = self.predict(cell, settings, seed)?;
        let m = RunMetrics::evaluate(&truth, &probs)?;
        if self.verbose {
            eprintln!(
                "{:<10} {:<12} seed {:<6} auc {:.3} macro-F1 {:.3} ({:.1}s)",
                cell.model.name(),
                cell.variant_label(),
                seed,
                m.auc,
                m.f1_macro,
                start.elapsed().as_secs_f64()
            );
        }
        self.results.lock().expect("result cache").insert(key, m);
        Ok(m)
    }

    /// All repetitions of every cell, in cell-then-repetition order.
    pub fn run(&self, spec: &ExperimentSpec) -> Result<Vec<RunRecord>, EvalError> {
        spec.validate()?;
        let seeds = spec.seeds();
        let mut out = Vec::with_capacity(spec.cells.len() * seeds.len());
        for cell in &spec.cells {
            if let Some(v) = cell.kg_variant {
                self.graph(v)?;
            }
            let metrics = self.exec.map(seeds.len(), |r| self.run_one(cell, &spec.settings, seeds[r]));
            for (r, m) in metrics.into_iter().enumerate() {
                out.push(RunRecord {
                    experiment: spec.name.clone(),
                    model: cell.model.name(),
                    kg_variant: cell.variant_label(),
                    repetition: r,
                    seed: seeds[r],
                    metrics: m?,
                });
            }
        }
        Ok(out)
    }
}

fn patient_rows(table: &EmbeddingTable, g: &CohortGraph, idx: &[usize]) -> Result<Matrix, EvalError> {
    let keys: Vec<String> = idx.iter().map(|&i| g.patients[i].iri.clone()).collect();
    if let Some(k) = keys.iter().find(|k| table.get(k).is_none()) {
        return Err(EvalError::Model(format!("no embedding for patient <{k}>")));
    }
    Ok(table.lookup(&keys))
}
