//! RDF2Vec: CBOW with negative sampling over random-walk tokens.
//!
//! Training is plain SGD with a linearly decaying step size, one example at a
//! time, using the closed-form gradient in [`cbow_gradient`].
//! [`cbow_loss`] records the same loss on a tape so the closed form can be
//! checked against reverse-mode and finite differences.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::index::GraphIndex;
use super::table::EmbeddingTable;
use super::walks::{random_walks, WalkConfig};
use super::ModelError;
use crate::exec::Execution;
use crate::grad::{Matrix, SparseRows, Tape, Var};
use crate::rdf::Graph;
use crate::rng::{domain, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rdf2VecConfig {
    pub walks: WalkConfig,
    pub dim: usize,
    /// Context tokens taken on each side of the centre.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    pub min_lr: f64,
    pub seed: u64,
}

impl Default for Rdf2VecConfig {
    fn default() -> Self {
        Rdf2VecConfig {
            walks: WalkConfig::default(),
            dim: 32,
            window: 1,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
            min_lr: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Rdf2VecModel {
    /// Input vectors of the node tokens, keyed by IRI.
    pub entities: EmbeddingTable,
    /// Input vectors of the predicate tokens, keyed by predicate IRI.
    pub predicates: EmbeddingTable,
    /// Mean example loss per epoch.
    pub losses: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Sparse gradient of one CBOW example: `(row, ∂L/∂row)` pairs, one per
/// occurrence (rows may repeat).
#[derive(Debug, Clone, PartialEq)]
pub struct CbowGradient {
    pub loss: f64,
    pub input: Vec<(usize, Vec<f64>)>,
    pub output: Vec<(usize, Vec<f64>)>,
}

/// `L = −log σ(u_t·h) − Σ_k log σ(−u_k·h)` with `h` the mean input vector of
/// `context`, and its gradient.
pub fn cbow_gradient(
    input: &Matrix,
    output: &Matrix,
    context: &[usize],
    target: usize,
    negatives: &[usize],
) -> CbowGradient {
    let d = input.cols();
    let mut h = vec![0.0; d];
    for &c in context {
        for (a, b) in h.iter_mut().zip(input.row(c)) {
            *a += b;
        }
    }
    let inv = 1.0 / context.len() as f64;
    h.iter_mut().for_each(|a| *a *= inv);
    let mut dh = vec![0.0; d];
    let mut loss = 0.0;
    let mut out_grads = Vec::with_capacity(1 + negatives.len());
    let labelled = std::iter::once((target, 1.0)).chain(negatives.iter().map(|&k| (k, 0.0)));
    for (row, label) in labelled {
        let u = output.row(row);
        let s: f64 = u.iter().zip(&h).map(|(a, b)| a * b).sum();
        loss -= if label > 0.0 { log_sigmoid(s) } else { log_sigmoid(-s) };
        let g = sigmoid(s) - label;
        for (a, b) in dh.iter_mut().zip(u) {
            *a += g * b;
        }
        out_grads.push((row, h.iter().map(|x| g * x).collect()));
    }
    let per_context: Vec<f64> = dh.iter().map(|x| x * inv).collect();
    CbowGradient {
        loss,
        input: context.iter().map(|&c| (c, per_context.clone())).collect(),
        output: out_grads,
    }
}

/// The CBOW loss of one example recorded on `tape`.
pub fn cbow_loss(
    tape: &mut Tape,
    input: Var,
    output: Var,
    context: &[usize],
    target: usize,
    negatives: &[usize],
) -> Var {
    let n_in = tape.value(input).rows();
    let mean = Arc::new(SparseRows::mean_of_groups(n_in, &[context.to_vec()]));
    let h = tape.sparse_matmul(mean, input);
    let k = negatives.len();
    let pos_u = tape.gather_rows(output, Arc::new(vec![target]));
    let pos = tape.row_dot(h, pos_u);
    let pos_ll = tape.log_sigmoid(pos);
    let mut total = tape.sum(pos_ll);
    if k > 0 {
        let hk = tape.gather_rows(h, Arc::new(vec![0; k]));
        let neg_u = tape.gather_rows(output, Arc::new(negatives.to_vec()));
        let neg = tape.row_dot(hk, neg_u);
        let flipped = tape.scale(neg, -1.0);
        let neg_ll = tape.log_sigmoid(flipped);
        let s = tape.sum(neg_ll);
        total = tape.add(total, s);
    }
    tape.scale(total, -1.0)
}

/// Replaces `out` with the tokens within `window` positions of `walk[i]`,
/// excluding position `i` itself.
pub fn context_window(walk: &[usize], i: usize, window: usize, out: &mut Vec<usize>) {
    out.clear();
    let lo = i.saturating_sub(window);
    let hi = (i + window + 1).min(walk.len());
    out.extend((lo..hi).filter(|&j| j != i).map(|j| walk[j]));
}

fn apply(m: &mut Matrix, grads: &[(usize, Vec<f64>)], lr: f64) {
    for (row, g) in grads {
        for (a, b) in m.row_mut(*row).iter_mut().zip(g) {
            *a -= lr * b;
        }
    }
}

/// Walks over the IRI part of `graph`, then CBOW on the walk corpus.
pub fn rdf2vec_train(graph: &Graph, cfg: &Rdf2VecConfig, exec: Execution) -> Result<Rdf2VecModel, ModelError> {
    let index = GraphIndex::new(graph, false);
    if index.node_count() == 0 || index.edges().is_empty() {
        return Err(ModelError::EmptyInput("RDF2Vec needs at least one triple".into()));
    }
    if cfg.dim == 0 || cfg.window == 0 || cfg.epochs == 0 {
        return Err(ModelError::Usage("RDF2Vec dimension, window and epochs must be positive".into()));
    }
    let mut walks = random_walks(&index, &cfg.walks, exec);
    let vocab = index.node_count() + index.relation_count();

    let mut counts = vec![0.0f64; vocab];
    for w in &walks {
        for &t in w {
            counts[t] += 1.0;
        }
    }
    let noise = WeightedIndex::new(counts.iter().map(|c| c.powf(0.75))).expect("non-empty corpus");

    let mut init = stream(cfg.seed, domain::INIT, 0);
    let half = 0.5 / cfg.dim as f64;
    let mut input = Matrix::from_fn(vocab, cfg.dim, |_, _| init.random_range(-half..half));
    let mut output = Matrix::zeros(vocab, cfg.dim);

    let total_tokens: usize = walks.iter().map(|w| w.len()).sum();
    let total_steps = (total_tokens * cfg.epochs).max(1) as f64;
    let mut rng = stream(cfg.seed, domain::TRAIN, 0);
    let mut step = 0usize;
    let mut losses = Vec::with_capacity(cfg.epochs);
    let mut negs = Vec::with_capacity(cfg.negatives);
    let mut context = Vec::with_capacity(2 * cfg.window);
    for _ in 0..cfg.epochs {
        walks.shuffle(&mut rng);
        let (mut sum, mut examples) = (0.0, 0usize);
        for w in &walks {
            for i in 0..w.len() {
                step += 1;
                context_window(w, i, cfg.window, &mut context);
                if context.is_empty() {
                    continue;
                }
                negs.clear();
                for _ in 0..cfg.negatives {
                    let k = noise.sample(&mut rng);
                    if k != w[i] {
                        negs.push(k);
                    }
                }
                let lr = (cfg.lr * (1.0 - step as f64 / total_steps)).max(cfg.min_lr);
                let g = cbow_gradient(&input, &output, &context, w[i], &negs);
                apply(&mut input, &g.input, lr);
                apply(&mut output, &g.output, lr);
                sum += g.loss;
                examples += 1;
            }
        }
        losses.push(sum / examples.max(1) as f64);
    }

    let n = index.node_count();
    let keys: Vec<String> = index.terms().iter().map(|t| t.as_iri().unwrap_or_default().to_string()).collect();
    let entities = input.select_rows(&(0..n).collect::<Vec<_>>());
    let predicates = input.select_rows(&(n..input.rows()).collect::<Vec<_>>());
    Ok(Rdf2VecModel {
        entities: EmbeddingTable::new(keys, entities),
        predicates: EmbeddingTable::new(index.relations().to_vec(), predicates),
        losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grad::relative_error;
    use crate::rdf::Term;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut r = stream(seed, 0, 0);
        Matrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
    }

    #[test]
    fn closed_form_matches_tape() {
        let (wi, wo) = (random(7, 4, 1), random(7, 4, 2));
        let ctx = [1, 3, 3];
        let negs = [0, 5, 2, 5];
        let g = cbow_gradient(&wi, &wo, &ctx, 4, &negs);
        let mut tape = Tape::new();
        let (a, b) = (tape.leaf(wi.clone()), tape.leaf(wo.clone()));
        let loss = cbow_loss(&mut tape, a, b, &ctx, 4, &negs);
        assert!((tape.value(loss).item() - g.loss).abs() < 1e-12);
        let grads = tape.backward(loss).unwrap();
        let mut dense_in = Matrix::zeros(7, 4);
        let mut dense_out = Matrix::zeros(7, 4);
        for (dense, sparse) in [(&mut dense_in, &g.input), (&mut dense_out, &g.output)] {
            for (r, v) in sparse {
                for (x, y) in dense.row_mut(*r).iter_mut().zip(v) {
                    *x += y;
                }
            }
        }
        assert!(relative_error(dense_in.data(), grads.wrt(a).unwrap().data()) < 1e-12);
        assert!(relative_error(dense_out.data(), grads.wrt(b).unwrap().data()) < 1e-12);
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let iri = |s: String| Term::iri(format!("http://x.org/{s}")).unwrap();
        let mut g = Graph::new();
        for i in 0..20 {
            let hub = if i % 2 == 0 { "even" } else { "odd" };
            g.add(&iri(format!("n{i}")), &iri("p".into()), &iri(hub.into()));
            g.add(&iri(hub.into()), &iri("q".into()), &iri(format!("n{i}")));
        }
        let cfg = Rdf2VecConfig {
            dim: 8,
            epochs: 10,
            ..Rdf2VecConfig::default()
        };
        let a = rdf2vec_train(&g, &cfg, Execution::Sequential).unwrap();
        let b = rdf2vec_train(&g, &cfg, Execution::Parallel).unwrap();
        assert_eq!(a.entities, b.entities);
        assert!(a.losses.last().unwrap() < a.losses.first().unwrap());
        assert_eq!(a.entities.len(), 22);
    }

    #[test]
    fn window_of_one_enumerates_neighbours() {
        let (a, p, b) = (0, 1, 2);
        let walk = [a, p, b];
        let mut ctx = Vec::new();
        let pairs: Vec<(Vec<usize>, usize)> = (0..walk.len())
            .map(|i| {
                context_window(&walk, i, 1, &mut ctx);
                (ctx.clone(), walk[i])
            })
            .collect();
        assert_eq!(pairs, vec![(vec![p], a), (vec![a, b], p), (vec![p], b)]);
    }

    /// Loss and dense gradients of the full-softmax CBOW objective.
    fn softmax_oracle(input: &Matrix, output: &Matrix, context: &[usize], target: usize) -> (f64, Vec<f64>) {
        let d = input.cols();
        let mut h = vec![0.0; d];
        for &c in context {
            for k in 0..d {
                h[k] += input.get(c, k) / context.len() as f64;
            }
        }
        let logits: Vec<f64> = (0..output.rows())
            .map(|j| (0..d).map(|k| output.get(j, k) * h[k]).sum())
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
        let p: Vec<f64> = logits.iter().map(|l| (l - max).exp() / z).collect();
        let loss = -p[target].ln();
        let mut g_in = vec![0.0; input.len()];
        let mut g_out = vec![0.0; output.len()];
        for j in 0..output.rows() {
            let e = p[j] - if j == target { 1.0 } else { 0.0 };
            for k in 0..d {
                g_out[j * d + k] = e * h[k];
                for &c in context {
                    g_in[c * d + k] += e * output.get(j, k) / context.len() as f64;
                }
            }
        }
        g_in.extend(g_out);
        (loss, g_in)
    }

    #[test]
    fn single_token_vocabulary_is_certain() {
        let (wi, wo) = (random(1, 3, 4), random(1, 3, 5));
        let (loss, grad) = softmax_oracle(&wi, &wo, &[0], 0);
        assert!(loss.abs() < 1e-15);
        assert!(grad.iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn negative_sampling_points_like_full_softmax() {
        for seed in 0..200u64 {
            let mut r = stream(seed, 1, 0);
            let vocab = r.random_range(2..=20usize);
            let d = r.random_range(1..=8usize);
            let scale = 0.5 / d as f64;
            let wi = Matrix::from_fn(vocab, d, |_, _| r.random_range(-scale..scale));
            let wo = Matrix::from_fn(vocab, d, |_, _| r.random_range(-scale..scale));
            let target = r.random_range(0..vocab);
            let context: Vec<usize> = (0..r.random_range(1..=2)).map(|_| r.random_range(0..vocab)).collect();
            let negatives: Vec<usize> = (0..vocab).filter(|&k| k != target).collect();
            let ns = cbow_gradient(&wi, &wo, &context, target, &negatives);
            // output side only: on the input side the two objectives weight
            // the noise rows differently and can disagree
            let mut dense = vec![0.0; vocab * d];
            for (r, g) in &ns.output {
                for k in 0..d {
                    dense[r * d + k] += g[k];
                }
            }
            let (_, full) = softmax_oracle(&wi, &wo, &context, target);
            let full = &full[vocab * d..];
            let dot: f64 = dense.iter().zip(full).map(|(a, b)| a * b).sum();
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let cosine = dot / (norm(&dense) * norm(full));
            assert!(cosine > 0.0, "seed {seed}: cosine {cosine}");
        }
    }
}
