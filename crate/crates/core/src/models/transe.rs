//! TransE with margin ranking loss and uniform head-or-tail corruption.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::index::GraphIndex;
use super::table::EmbeddingTable;
use super::ModelError;
use crate::grad::{Adam, AdamConfig, Matrix, ParamId, ParamStore, Tape, Var};
use crate::rdf::Graph;
use crate::rng::{domain, stream, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransEConfig {
    pub dim: usize,
    pub epochs: usize,
    pub margin: f64,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TransEConfig {
    fn default() -> Self {
        TransEConfig {
            dim: 32,
            epochs: 50,
            margin: 1.0,
            batch_size: 4096,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

/// `‖h + r − t‖₁`.
pub fn transe_score(h: &[f64], r: &[f64], t: &[f64]) -> Result<f64, ModelError> {
    if h.len() != r.len() || h.len() != t.len() {
        return Err(ModelError::Dimension {
            expected: h.len(),
            got: if r.len() != h.len() { r.len() } else { t.len() },
        });
    }
    Ok(h.iter().zip(r).zip(t).map(|((h, r), t)| (h + r - t).abs()).sum())
}

#[derive(Debug, Clone)]
pub struct TransEModel {
    pub entities: EmbeddingTable,
    pub relations: EmbeddingTable,
    /// Mean hinge loss per epoch.
    pub losses: Vec<f64>,
}

pub(crate) struct TransEParams {
    pub store: ParamStore,
    pub entities: ParamId,
    pub relations: ParamId,
}

/// Mean hinge loss `max(0, γ + f(h,r,t) − f(h',r,t'))` of a batch on the tape.
pub fn transe_loss(
    tape: &mut Tape,
    store: &ParamStore,
    entities: ParamId,
    relations: ParamId,
    positive: &[(usize, usize, usize)],
    negative: &[(usize, usize, usize)],
    margin: f64,
) -> Var {
    let e = tape.param(store, entities);
    let r = tape.param(store, relations);
    let col = |ts: &[(usize, usize, usize)], k: usize| -> Arc<Vec<usize>> {
        Arc::new(ts.iter().map(|t| [t.0, t.1, t.2][k]).collect())
    };
    let score = |tape: &mut Tape, ts: &[(usize, usize, usize)]| {
        let h = tape.gather_rows(e, col(ts, 0));
        let rr = tape.gather_rows(r, col(ts, 1));
        let t = tape.gather_rows(e, col(ts, 2));
        let s = tape.add(h, rr);
        let d = tape.sub(s, t);
        tape.l1_rows(d)
    };
    let pos = score(tape, positive);
    let neg = score(tape, negative);
    let diff = tape.sub(pos, neg);
    let shifted = tape.offset(diff, margin);
    let hinge = tape.relu(shifted);
    tape.mean(hinge)
}

fn normalize_rows(m: &mut Matrix) {
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.0 {
            row.iter_mut().for_each(|v| *v /= n);
        }
    }
}

pub(crate) fn init_transe(n_entities: usize, n_relations: usize, dim: usize, rng: &mut StreamRng) -> TransEParams {
    let bound = 6.0 / (dim as f64).sqrt();
    let mut ents = Matrix::from_fn(n_entities, dim, |_, _| rng.random_range(-bound..bound));
    let mut rels = Matrix::from_fn(n_relations, dim, |_, _| rng.random_range(-bound..bound));
    normalize_rows(&mut ents);
    normalize_rows(&mut rels);
    let mut store = ParamStore::new();
    let entities = store.add("entities", ents);
    let relations = store.add("relations", rels);
    TransEParams {
        store,
        entities,
        relations,
    }
}

fn corrupt(t: (usize, usize, usize), n: usize, rng: &mut StreamRng) -> (usize, usize, usize) {
    let e = rng.random_range(0..n);
    if rng.random_bool(0.5) {
        (e, t.1, t.2)
    } else {
        (t.0, t.1, e)
    }
}

/// Trains on the IRI-object triples of `graph`; literal triples are ignored.
pub fn transe_train(graph: &Graph, cfg: &TransEConfig) -> Result<TransEModel, ModelError> {
    let index = GraphIndex::new(graph, false);
    transe_train_index(&index, cfg)
}

pub(crate) fn transe_train_index(index: &GraphIndex, cfg: &TransEConfig) -> Result<TransEModel, ModelError> {
    if index.edges().is_empty() {
        return Err(ModelError::EmptyInput("TransE needs at least one triple".into()));
    }
    if cfg.dim == 0 || cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(ModelError::Usage("TransE counts must be positive".into()));
    }
    let n = index.node_count();
    let mut init_rng = stream(cfg.seed, domain::INIT, 0);
    let mut p = init_transe(n, index.relation_count(), cfg.dim, &mut init_rng);
    let mut adam = Adam::new(cfg.adam, &p.store);
    let mut rng = stream(cfg.seed, domain::TRAIN, 0);
    let mut triples = index.edges().to_vec();
    let mut losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        triples.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in triples.chunks(cfg.batch_size) {
            let neg: Vec<_> = batch.iter().map(|&t| corrupt(t, n, &mut rng)).collect();
            let mut tape = Tape::new();
            let loss = transe_loss(&mut tape, &p.store, p.entities, p.relations, batch, &neg, cfg.margin);
            total += tape.value(loss).item() * batch.len() as f64;
            let grads = tape.backward(loss)?.for_params(&p.store);
            adam.step(&mut p.store, &grads)?;
        }
        normalize_rows(p.store.get_mut(p.entities));
        losses.push(total / triples.len() as f64);
    }
    let keys: Vec<String> = index.terms().iter().map(|t| t.as_iri().unwrap_or_default().to_string()).collect();
    Ok(TransEModel {
        entities: EmbeddingTable::new(keys, p.store.get(p.entities).clone()),
        relations: EmbeddingTable::new(index.relations().to_vec(), p.store.get(p.relations).clone()),
        losses,
    })
}
