//! Relational GCN for patient outcome classification.
//!
//! Every subject aggregates its objects, per relation, with mean
//! normalisation. Relation weights use a basis decomposition
//! `W_r = Σ_b a_rb V_b`. A layer computes
//!
//! ```text
//! h'_i = Σ_r Σ_{j ∈ N_i^r} W_r h_j / |N_i^r| + W_0 h_i + bias
//! ```
//!
//! followed by PReLU. A linear projection maps the last layer's patient rows
//! to class scores. Entity inputs are a learnable table; literal inputs pass
//! through a shared [`LiteralEncoder`].
//!
//! Only the receptive field of the patient nodes is materialised: the
//! targets of the last layer are the patients, and the sources of a layer are
//! its targets plus all their objects, which in turn are the targets of the
//! layer below.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::export::Checkpoint;
use super::index::GraphIndex;
use super::literal::LiteralEncoder;
use super::ModelError;
use crate::eval::metrics::macro_f1;
use crate::grad::{softmax_rows, Adam, AdamConfig, Matrix, ParamId, ParamStore, RelationalAdjacency, Tape, Var};
use crate::rdf::{Graph, NodeRole};
use crate::rng::{domain, stream, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RgcnConfig {
    /// Width of the entity and literal input vectors.
    pub input_dim: usize,
    /// Output width of each relational layer; the layer count is `hidden.len()`.
    pub hidden: Vec<usize>,
    pub classes: usize,
    pub bases: usize,
    pub literals: bool,
    pub epochs: usize,
    pub patience: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl RgcnConfig {
    /// Input width 100, a first layer of width 64 and further layers of
    /// width 32.
    pub fn with_layers(layers: usize, literals: bool) -> Self {
        assert!(layers >= 1, "at least one layer");
        let hidden = (0..layers).map(|k| if k == 0 { 64 } else { 32 }).collect();
        RgcnConfig {
            input_dim: 100,
            hidden,
            classes: 3,
            bases: 4,
            literals,
            epochs: 200,
            patience: 20,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }

    pub fn layers(&self) -> usize {
        self.hidden.len()
    }

    /// Input and output width of every layer.
    fn widths(&self) -> Vec<(usize, usize)> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

impl Default for RgcnConfig {
    fn default() -> Self {
        RgcnConfig::with_layers(3, true)
    }
}

#[derive(Debug, Clone)]
struct LayerPlan {
    adjacency: Arc<RelationalAdjacency>,
    /// Position of each target among the layer's sources.
    self_index: Arc<Vec<usize>>,
    coeff: ParamId,
    bases: ParamId,
    self_weight: ParamId,
    bias: ParamId,
    slope: ParamId,
}

/// A relational GCN bound to one graph and one ordered list of patients.
#[derive(Debug, Clone)]
pub struct Rgcn {
    config: RgcnConfig,
    patients: Vec<String>,
    relations: Vec<String>,
    /// IRIs of the entity-table rows.
    entity_keys: Vec<String>,
    entity_rows: Arc<Vec<usize>>,
    literal_values: Arc<Vec<f64>>,
    entity: ParamId,
    encoder: Option<LiteralEncoder>,
    layers: Vec<LayerPlan>,
    projection: (ParamId, ParamId),
    template: ParamStore,
}

fn glorot(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut StreamRng) -> Matrix {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-a..a))
}

impl Rgcn {
    /// Plans the receptive field of `patients` (IRIs) in `graph`. With
    /// `config.literals == false`, literal triples are dropped.
    pub fn new(graph: &Graph, patients: &[String], config: &RgcnConfig) -> Result<Self, ModelError> {
        if patients.is_empty() {
            return Err(ModelError::EmptyInput("no patients to classify".into()));
        }
        if config.input_dim == 0 || config.classes == 0 || config.bases == 0 || config.hidden.contains(&0) {
            return Err(ModelError::Usage("RGCN widths and basis count must be positive".into()));
        }
        if config.hidden.is_empty() {
            return Err(ModelError::Usage("RGCN needs at least one layer".into()));
        }
        let index = GraphIndex::new(graph, config.literals);
        let mut targets = Vec::with_capacity(patients.len());
        for p in patients {
            let node = index
                .node_by_iri(p)
                .ok_or_else(|| ModelError::MissingEmbedding(p.clone()))?;
            if index.role(node) != NodeRole::Patient {
                return Err(ModelError::Usage(format!("`{p}` is not a patient node")));
            }
            targets.push(node);
        }

        let mut out_edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); index.node_count()];
        for &(s, r, o) in index.edges() {
            out_edges[s].push((r, o));
        }
        let n_rel = index.relation_count().max(1);
        let n_bases = config.bases.min(n_rel);
        let widths = config.widths();
        let n_layers = widths.len();

        // walk down from the patients, collecting (targets, sources) per layer
        let mut fields: Vec<(Vec<usize>, Vec<usize>)> = Vec::with_capacity(n_layers);
        for depth in 0..n_layers {
            let mut seen: HashMap<usize, ()> = targets.iter().map(|&t| (t, ())).collect();
            let mut extra = Vec::new();
            for &t in &targets {
                for &(_, o) in &out_edges[t] {
                    if seen.insert(o, ()).is_none() {
                        extra.push(o);
                    }
                }
            }
            extra.sort_unstable();
            let mut sources = targets.clone();
            sources.extend(extra);
            if depth == n_layers - 1 {
                // first layer: entities first, then literals
                let (lits, ents): (Vec<usize>, Vec<usize>) = sources.iter().partition(|&&n| index.is_literal(n));
                sources = ents.into_iter().chain(lits).collect();
            }
            fields.push((targets, sources.clone()));
            targets = sources;
        }
        fields.reverse();

        let mut template = ParamStore::new();
        let input_nodes = &fields[0].1;
        let entity_nodes: Vec<usize> = input_nodes.iter().copied().filter(|&n| !index.is_literal(n)).collect();
        let literal_nodes: Vec<usize> = input_nodes.iter().copied().filter(|&n| index.is_literal(n)).collect();
        let inputs = index.literal_inputs();
        let literal_values: Vec<f64> = literal_nodes.iter().map(|&n| inputs[n].unwrap_or(0.0)).collect();
        let entity = template.add("entity", Matrix::zeros(entity_nodes.len(), config.input_dim));
        let encoder = (config.literals && !literal_nodes.is_empty()).then(|| {
            LiteralEncoder::new(
                &mut template,
                Matrix::zeros(1, config.input_dim),
                Matrix::zeros(1, config.input_dim),
            )
        });

        let mut layers = Vec::with_capacity(n_layers);
        for (l, ((tgts, srcs), &(d_in, d_out))) in fields.iter().zip(&widths).enumerate() {
            let pos: HashMap<usize, usize> = srcs.iter().enumerate().map(|(i, &n)| (n, i)).collect();
            let mut edges = Vec::new();
            for (ti, &t) in tgts.iter().enumerate() {
                for &(r, o) in &out_edges[t] {
                    edges.push((ti, r, pos[&o]));
                }
            }
            let adjacency = Arc::new(RelationalAdjacency::new(tgts.len(), srcs.len(), n_rel, &edges));
            let self_index = Arc::new(tgts.iter().map(|t| pos[t]).collect());
            let coeff = template.add(format!("layer{l}.coeff"), Matrix::zeros(n_rel, n_bases));
            let bases = template.add(format!("layer{l}.bases"), Matrix::zeros(n_bases * d_in, d_out));
            let self_weight = template.add(format!("layer{l}.self"), Matrix::zeros(d_in, d_out));
            let bias = template.add(format!("layer{l}.bias"), Matrix::zeros(1, d_out));
            let slope = template.add(format!("layer{l}.prelu"), Matrix::zeros(1, 1));
            layers.push(LayerPlan {
                adjacency,
                self_index,
                coeff,
                bases,
                self_weight,
                bias,
                slope,
            });
        }

        let d_last = *config.hidden.last().expect("non-empty");
        let projection = (
            template.add("output.weight", Matrix::zeros(d_last, config.classes)),
            template.add("output.bias", Matrix::zeros(1, config.classes)),
        );

        Ok(Rgcn {
            config: config.clone(),
            patients: patients.to_vec(),
            relations: index.relations().to_vec(),
            entity_keys: entity_nodes
                .iter()
                .map(|&n| index.term(n).as_iri().expect("entity IRI").to_string())
                .collect(),
            entity_rows: Arc::new((0..entity_nodes.len()).collect()),
            literal_values: Arc::new(literal_values),
            entity,
            encoder,
            layers,
            projection,
            template,
        })
    }

    pub fn config(&self) -> &RgcnConfig {
        &self.config
    }

    pub fn patients(&self) -> &[String] {
        &self.patients
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn entity_keys(&self) -> &[String] {
        &self.entity_keys
    }

    pub fn literal_count(&self) -> usize {
        self.literal_values.len()
    }

    /// Parameter store with the layout of this model, all zeros.
    pub fn zero_params(&self) -> ParamStore {
        self.template.clone()
    }

    /// Glorot-initialised parameters; PReLU slopes start at 0.25.
    pub fn init_params(&self, seed: u64) -> ParamStore {
        let mut rng = stream(seed, domain::INIT, 0);
        let mut store = self.template.clone();
        let d = self.config.input_dim;
        *store.get_mut(self.entity) = glorot(self.entity_keys.len(), d, d, d, &mut rng);
        if let Some(enc) = self.encoder {
            *store.get_mut(enc.weight) = glorot(1, d, 1, d, &mut rng);
        }
        for (layer, &(d_in, d_out)) in self.layers.iter().zip(&self.config.widths()) {
            let (r, b) = store.get(layer.coeff).shape();
            *store.get_mut(layer.coeff) = glorot(r, b, r, b, &mut rng);
            *store.get_mut(layer.bases) = glorot(b * d_in, d_out, d_in, d_out, &mut rng);
            *store.get_mut(layer.self_weight) = glorot(d_in, d_out, d_in, d_out, &mut rng);
            store.get_mut(layer.slope).data_mut()[0] = 0.25;
        }
        let (w, _) = self.projection;
        let (d, k) = store.get(w).shape();
        *store.get_mut(w) = glorot(d, k, d, k, &mut rng);
        store
    }

    /// Per-relation parameter count of layer `l`: `B·d_in·d_out + R·B`.
    pub fn relation_param_count(&self, l: usize) -> usize {
        let layer = &self.layers[l];
        self.template.get(layer.bases).len() + self.template.get(layer.coeff).len()
    }

    /// Pre-softmax scores, one row per patient.
    pub fn logits(&self, tape: &mut Tape, store: &ParamStore) -> Var {
        let table = tape.param(store, self.entity);
        let ents = tape.gather_rows(table, self.entity_rows.clone());
        let mut h = match self.encoder {
            Some(enc) => {
                let lits = enc.encode(tape, store, self.literal_values.clone());
                tape.concat_rows(&[ents, lits])
            }
            None => ents,
        };
        for layer in &self.layers {
            let coeff = tape.param(store, layer.coeff);
            let agg = tape.relational_aggregate(h, coeff, layer.adjacency.clone());
            let v = tape.param(store, layer.bases);
            let msg = tape.matmul(agg, v);
            let own = tape.gather_rows(h, layer.self_index.clone());
            let w0 = tape.param(store, layer.self_weight);
            let own = tape.matmul(own, w0);
            let sum = tape.add(msg, own);
            let b = tape.param(store, layer.bias);
            let z = tape.add_row(sum, b);
            let a = tape.param(store, layer.slope);
            h = tape.prelu(z, a);
        }
        let w = tape.param(store, self.projection.0);
        let b = tape.param(store, self.projection.1);
        let z = tape.matmul(h, w);
        tape.add_row(z, b)
    }

    /// Mean cross-entropy over `train`, pairs of (patient position, class).
    pub fn loss(&self, tape: &mut Tape, store: &ParamStore, train: &[(usize, usize)]) -> Var {
        let logits = self.logits(tape, store);
        self.loss_from_logits(tape, logits, train)
    }

    fn loss_from_logits(&self, tape: &mut Tape, logits: Var, train: &[(usize, usize)]) -> Var {
        let rows = Arc::new(train.iter().map(|t| t.0).collect());
        let picked = tape.gather_rows(logits, rows);
        tape.softmax_cross_entropy(picked, Arc::new(train.iter().map(|t| t.1).collect()))
    }

    /// Class probabilities, one row per patient.
    pub fn probabilities(&self, store: &ParamStore) -> Matrix {
        let mut tape = Tape::new();
        let l = self.logits(&mut tape, store);
        softmax_rows(tape.value(l))
    }

    /// Parameters from a checkpoint written by [`RgcnModel::checkpoint`].
    pub fn load_params(&self, checkpoint: &Checkpoint) -> Result<ParamStore, ModelError> {
        let loaded = checkpoint.to_store()?;
        if checkpoint.nodes != self.entity_keys {
            return Err(ModelError::Checkpoint("entity rows do not match this graph".into()));
        }
        let mut store = self.template.clone();
        for (id, name, m) in self.template.iter() {
            let src = loaded
                .find(name)
                .ok_or_else(|| ModelError::Checkpoint(format!("missing parameter `{name}`")))?;
            let v = loaded.get(src);
            if v.shape() != m.shape() {
                return Err(ModelError::Checkpoint(format!("parameter `{name}` has the wrong shape")));
            }
            *store.get_mut(id) = v.clone();
        }
        Ok(store)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub loss: f64,
    pub validation_f1: f64,
}

#[derive(Debug, Clone)]
pub struct RgcnModel {
    pub rgcn: Rgcn,
    /// Parameters of the epoch with the best validation macro-F1.
    pub params: ParamStore,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

impl RgcnModel {
    pub fn probabilities(&self) -> Matrix {
        self.rgcn.probabilities(&self.params)
    }

    pub fn checkpoint(&self, name: &str) -> Checkpoint {
        Checkpoint::from_store(name, &self.params, self.rgcn.entity_keys.clone())
    }
}

fn check_labels(rgcn: &Rgcn, set: &[(usize, usize)], what: &str) -> Result<(), ModelError> {
    for &(p, k) in set {
        if p >= rgcn.patients.len() {
            return Err(ModelError::Usage(format!("{what} patient position {p} out of range")));
        }
        if k >= rgcn.config.classes {
            return Err(ModelError::Usage(format!("{what} label {k} out of range")));
        }
    }
    Ok(())
}

/// Full-batch training with Adam. The loss uses only `train`; `validation`
/// drives model selection and early stopping.
pub fn rgcn_train(
    graph: &Graph,
    patients: &[String],
    train: &[(usize, usize)],
    validation: &[(usize, usize)],
    config: &RgcnConfig,
) -> Result<RgcnModel, ModelError> {
    let rgcn = Rgcn::new(graph, patients, config)?;
    if train.is_empty() {
        return Err(ModelError::EmptyInput("no training patients".into()));
    }
    check_labels(&rgcn, train, "training")?;
    check_labels(&rgcn, validation, "validation")?;
    let mut store = rgcn.init_params(config.seed);
    let mut adam = Adam::new(config.adam, &store);
    let val_true: Vec<usize> = validation.iter().map(|v| v.1).collect();
    let mut best = (f64::NEG_INFINITY, 0usize, store.clone());
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..=config.epochs {
        let mut tape = Tape::new();
        let logits = rgcn.logits(&mut tape, &store);
        let pred = tape.value(logits).argmax_rows();
        let val_pred: Vec<usize> = validation.iter().map(|v| pred[v.0]).collect();
        let f1 = macro_f1(&val_true, &val_pred, config.classes);
        if f1 > best.0 {
            best = (f1, epoch, store.clone());
        }
        if epoch == config.epochs || epoch - best.1 >= config.patience {
            break;
        }
        let loss = rgcn.loss_from_logits(&mut tape, logits, train);
        let value = tape.value(loss).item();
        if !value.is_finite() {
            return Err(ModelError::Grad(crate::grad::GradError::NonFinite {
                context: format!("RGCN loss at epoch {epoch}"),
            }));
        }
        history.push(EpochRecord {
            loss: value,
            validation_f1: f1,
        });
        let grads = tape.backward(loss)?.for_params(&store);
        adam.step(&mut store, &grads)?;
    }
    Ok(RgcnModel {
        rgcn,
        params: best.2,
        best_epoch: best.1,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::Term;

    fn iri(s: &str) -> Term {
        Term::iri(format!("http://x.org/{s}")).unwrap()
    }

    fn patient(g: &mut Graph, name: &str) -> String {
        let t = iri(name);
        g.set_role(&t, NodeRole::Patient);
        t.as_iri().unwrap().to_string()
    }

    fn one_layer(dim: usize) -> RgcnConfig {
        RgcnConfig {
            input_dim: dim,
            hidden: vec![dim],
            classes: dim,
            bases: 1,
            ..RgcnConfig::with_layers(1, false)
        }
    }

    /// Identity activation and output projection.
    fn transparent_head(s: &mut ParamStore, dim: usize) {
        s.get_mut(s.find("layer0.prelu").unwrap()).data_mut()[0] = 1.0;
        *s.get_mut(s.find("output.weight").unwrap()) = Matrix::identity(dim);
        *s.get_mut(s.find("output.bias").unwrap()) = Matrix::zeros(1, dim);
    }

    #[test]
    fn identity_layer_adds_neighbour() {
        let mut g = Graph::new();
        let a = patient(&mut g, "a");
        g.add(&iri("a"), &iri("r"), &iri("b"));
        let m = Rgcn::new(&g, &[a], &one_layer(2)).unwrap();
        let mut s = m.zero_params();
        let table = s.find("entity").unwrap();
        // rows: a, b
        *s.get_mut(table) = Matrix::from_rows(&[vec![1.0, 2.0], vec![10.0, 20.0]]);
        *s.get_mut(s.find("layer0.coeff").unwrap()) = Matrix::filled(1, 1, 1.0);
        *s.get_mut(s.find("layer0.bases").unwrap()) = Matrix::identity(2);
        *s.get_mut(s.find("layer0.self").unwrap()) = Matrix::identity(2);
        transparent_head(&mut s, 2);
        let mut tape = Tape::new();
        let out = m.logits(&mut tape, &s);
        assert_eq!(tape.value(out).data(), &[11.0, 22.0]);
    }

    #[test]
    fn isolated_node_sees_only_itself() {
        let mut g = Graph::new();
        let a = patient(&mut g, "a");
        g.add(&iri("a"), &iri("r"), &iri("b"));
        let b = iri("b");
        g.set_role(&b, NodeRole::Patient);
        let m = Rgcn::new(&g, &["http://x.org/b".to_string(), a], &one_layer(2)).unwrap();
        let mut s = m.init_params(3);
        let w0 = Matrix::from_rows(&[vec![2.0, 0.0], vec![1.0, -1.0]]);
        *s.get_mut(s.find("layer0.self").unwrap()) = w0.clone();
        *s.get_mut(s.find("layer0.bias").unwrap()) = Matrix::zeros(1, 2);
        transparent_head(&mut s, 2);
        let x = s.get(s.find("entity").unwrap()).row(0).to_vec();
        let mut tape = Tape::new();
        let out = m.logits(&mut tape, &s);
        let expect = [2.0 * x[0] + x[1], -x[1]];
        assert_eq!(tape.value(out).row(0), &expect);
    }

    fn toy(n: usize) -> (Graph, Vec<String>, Vec<usize>) {
        let mut g = Graph::new();
        let mut ps = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let name = format!("p{i}");
            ps.push(patient(&mut g, &name));
            let y = i % 2;
            g.add(&iri(&name), &iri("has"), &iri(if y == 0 { "c0" } else { "c1" }));
            g.add(&iri(&name), &iri("other"), &iri("shared"));
            ys.push(y);
        }
        (g, ps, ys)
    }

    #[test]
    fn separable_toy_is_fit_and_starts_near_uniform() {
        let (g, ps, ys) = toy(20);
        let mut cfg = RgcnConfig::with_layers(2, false);
        cfg.input_dim = 16;
        cfg.hidden = vec![8, 8];
        cfg.classes = 3;
        cfg.epochs = 150;
        cfg.adam.lr = 0.01;
        let train: Vec<_> = (0..20).map(|i| (i, ys[i])).collect();
        let m = rgcn_train(&g, &ps, &train, &train, &cfg).unwrap();
        let pred = m.probabilities().argmax_rows();
        assert_eq!(pred, ys);
        assert!((m.history[0].loss - 3f64.ln()).abs() < 0.5, "{}", m.history[0].loss);
        let p = m.probabilities();
        for r in 0..p.rows() {
            assert!((p.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn basis_decomposition_is_smaller() {
        let mut g = Graph::new();
        let p = patient(&mut g, "p");
        for r in 0..30 {
            g.add(&iri("p"), &iri(&format!("r{r}")), &iri(&format!("o{r}")));
        }
        let mut cfg = RgcnConfig::with_layers(1, false);
        cfg.input_dim = 16;
        cfg.hidden = vec![16];
        let m = Rgcn::new(&g, &[p], &cfg).unwrap();
        assert_eq!(m.relation_param_count(0), 4 * 16 * 16 + 30 * 4);
        assert!(m.relation_param_count(0) < 30 * 16 * 16);
    }

    #[test]
    fn non_patient_is_rejected() {
        let (g, _, _) = toy(2);
        let err = Rgcn::new(&g, &["http://x.org/c0".into()], &RgcnConfig::default()).unwrap_err();
        assert!(matches!(err, ModelError::Usage(_)));
    }

    #[test]
    fn checkpoint_reload_reproduces_output() {
        let (g, ps, ys) = toy(6);
        let mut cfg = RgcnConfig::with_layers(2, false);
        cfg.input_dim = 4;
        cfg.hidden = vec![4, 4];
        cfg.epochs = 3;
        let train: Vec<_> = (0..6).map(|i| (i, ys[i])).collect();
        let m = rgcn_train(&g, &ps, &train, &train, &cfg).unwrap();
        let ck = Checkpoint::from_json(&m.checkpoint("RGCN2").to_json().unwrap()).unwrap();
        let s = m.rgcn.load_params(&ck).unwrap();
        assert_eq!(m.rgcn.probabilities(&s), m.probabilities());
    }

    #[test]
    fn triple_order_does_not_change_outputs() {
        let (g, ps, _) = toy(8);
        let mut triples = g.triples();
        for (i, t) in triples.clone().iter().enumerate() {
            let lit = Term::literal(crate::rdf::Literal::decimal(i as f64 / 16.0));
            triples.push(crate::rdf::Triple::new(t.subject.clone(), iri("v"), lit));
        }
        let build = |order: &[crate::rdf::Triple]| {
            let mut h = Graph::new();
            for t in order {
                h.insert(t.clone());
            }
            for p in &ps {
                h.set_role(&Term::iri(p.clone()).unwrap(), NodeRole::Patient);
            }
            h
        };
        let mut shuffled = triples.clone();
        shuffled.reverse();
        shuffled.rotate_left(5);
        let mut cfg = RgcnConfig::with_layers(2, true);
        cfg.input_dim = 6;
        cfg.hidden = vec![5, 4];
        let run = |h: &Graph| {
            let m = Rgcn::new(h, &ps, &cfg).unwrap();
            m.probabilities(&m.init_params(9))
        };
        assert_eq!(run(&build(&triples)), run(&build(&shuffled)));
    }
}
