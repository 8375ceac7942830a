//! Softmax classifiers trained with minibatch Adam: logistic regression
//! (no hidden layer) and the tanh feed-forward network.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_xy, BaselineError, Classifier};
use crate::grad::{softmax_rows, Adam, AdamConfig, Matrix, ParamId, ParamStore, Tape, Var};
use crate::rng::{domain, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub classes: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![100, 50, 10],
            classes: 3,
            epochs: 100,
            batch_size: 64,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegConfig {
    pub classes: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// L2 strength, applied through Adam's weight decay.
    pub l2: f64,
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            classes: 3,
            epochs: 100,
            batch_size: 64,
            lr: 1e-2,
            l2: 1e-4,
            seed: 0,
        }
    }
}

impl From<&LogRegConfig> for MlpConfig {
    fn from(c: &LogRegConfig) -> Self {
        MlpConfig {
            hidden: Vec::new(),
            classes: c.classes,
            epochs: c.epochs,
            batch_size: c.batch_size,
            adam: AdamConfig {
                lr: c.lr,
                weight_decay: c.l2,
                ..AdamConfig::default()
            },
            seed: c.seed,
        }
    }
}

/// Dense layers with tanh between them and a softmax output.
#[derive(Debug, Clone)]
pub struct Mlp {
    inputs: usize,
    layers: Vec<(ParamId, ParamId)>,
    params: ParamStore,
    /// Mean training loss per epoch.
    pub losses: Vec<f64>,
}

impl Mlp {
    fn init(inputs: usize, cfg: &MlpConfig) -> Mlp {
        let mut rng = stream(cfg.seed, domain::INIT, 0);
        let mut dims = vec![inputs];
        dims.extend(&cfg.hidden);
        dims.push(cfg.classes);
        let mut params = ParamStore::new();
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let a = (6.0 / (w[0] + w[1]) as f64).sqrt();
                let weight = Matrix::from_fn(w[0], w[1], |_, _| rng.random_range(-a..a));
                (
                    params.add(format!("dense{l}.weight"), weight),
                    params.add(format!("dense{l}.bias"), Matrix::zeros(1, w[1])),
                )
            })
            .collect();
        Mlp {
            inputs,
            layers,
            params,
            losses: Vec::new(),
        }
    }

    fn logits(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Var {
        let mut h = x;
        for (l, &(w, b)) in self.layers.iter().enumerate() {
            let wv = tape.param(store, w);
            let bv = tape.param(store, b);
            let z = tape.matmul(h, wv);
            h = tape.add_row(z, bv);
            if l + 1 < self.layers.len() {
                h = tape.tanh(h);
            }
        }
        h
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    /// Mean cross-entropy of the current parameters on `(x, y)`.
    pub fn loss(&self, x: &Matrix, y: &[usize]) -> f64 {
        let mut tape = Tape::new();
        let xv = tape.leaf(x.clone());
        let l = self.logits(&mut tape, &self.params, xv);
        let loss = tape.softmax_cross_entropy(l, Arc::new(y.to_vec()));
        tape.value(loss).item()
    }
}

impl Classifier for Mlp {
    fn predict_proba(&self, x: &Matrix) -> Result<Matrix, BaselineError> {
        if x.cols() != self.inputs {
            return Err(BaselineError::Dimension {
                expected: self.inputs,
                got: x.cols(),
            });
        }
        let mut tape = Tape::new();
        let xv = tape.leaf(x.clone());
        let l = self.logits(&mut tape, &self.params, xv);
        Ok(softmax_rows(tape.value(l)))
    }
}

fn fit(x: &Matrix, y: &[usize], cfg: &MlpConfig) -> Result<Mlp, BaselineError> {
    check_xy(x, y, cfg.classes)?;
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(BaselineError::Usage("epochs and batch size must be positive".into()));
    }
    let mut model = Mlp::init(x.cols(), cfg);
    let mut adam = Adam::new(cfg.adam, &model.params);
    let mut rng = stream(cfg.seed, domain::TRAIN, 0);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut tape = Tape::new();
            let xb = tape.leaf(x.select_rows(batch));
            let logits = model.logits(&mut tape, &model.params, xb);
            let targets = Arc::new(batch.iter().map(|&i| y[i]).collect());
            let loss = tape.softmax_cross_entropy(logits, targets);
            total += tape.value(loss).item() * batch.len() as f64;
            let grads = tape.backward(loss)?.for_params(&model.params);
            adam.step(&mut model.params, &grads)?;
        }
        model.losses.push(total / x.rows() as f64);
    }
    Ok(model)
}

/// Multinomial logistic regression.
pub fn train_logreg(x: &Matrix, y: &[usize], cfg: &LogRegConfig) -> Result<Mlp, BaselineError> {
    fit(x, y, &MlpConfig::from(cfg))
}

/// Feed-forward network with tanh hidden layers.
pub fn train_nn(x: &Matrix, y: &[usize], cfg: &MlpConfig) -> Result<Mlp, BaselineError> {
    fit(x, y, cfg)
}
