//! Random forest of CART trees with Gini impurity.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_xy, BaselineError, Classifier};
use crate::exec::Execution;
use crate::grad::Matrix;
use crate::rng::{domain, stream, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub trees: usize,
    pub classes: usize,
    /// Minimum number of samples in each child of a split.
    pub min_leaf: usize,
    /// Features tried per split; `None` means `⌈√d⌉`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            trees: 100,
            classes: 3,
            min_leaf: 2,
            max_features: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(k) => return k,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    cfg: &'a ForestConfig,
    mtry: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.cfg.classes];
        for &r in rows {
            c[self.y[r]] += 1;
        }
        c
    }

    /// Best `(feature, threshold, weighted child impurity)` among the sampled features.
    fn best_split(&self, rows: &[usize], rng: &mut StreamRng) -> Option<(usize, f64, f64)> {
        let n = rows.len();
        let d = self.x.cols();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
        for f in sample(rng, d, self.mtry.min(d)).into_iter() {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (self.x.get(r, f), self.y[r])));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = vec![0usize; self.cfg.classes];
            let mut right = self.counts(rows);
            for i in 0..n - 1 {
                left[sorted[i].1] += 1;
                right[sorted[i].1] -= 1;
                let nl = i + 1;
                if sorted[i].0 == sorted[i + 1].0 || nl < self.cfg.min_leaf || n - nl < self.cfg.min_leaf {
                    continue;
                }
                let score = (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64;
                if best.is_none_or(|b| score < b.2) {
                    best = Some((f, 0.5 * (sorted[i].0 + sorted[i + 1].0), score));
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, rng: &mut StreamRng) -> usize {
        let counts = self.counts(&rows);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(majority(&counts)));
        let impurity = gini(&counts, rows.len());
        if impurity == 0.0 || rows.len() < 2 * self.cfg.min_leaf {
            return id;
        }
        let Some((feature, threshold, score)) = self.best_split(&rows, rng) else {
            return id;
        };
        if score >= impurity {
            return id;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.x.get(i, feature) <= threshold);
        let left = self.grow(l, rng);
        let right = self.grow(r, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
    classes: usize,
    inputs: usize,
}

impl Forest {
    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }
}

impl Classifier for Forest {
    /// Fraction of trees voting for each class.
    fn predict_proba(&self, x: &Matrix) -> Result<Matrix, BaselineError> {
        if x.cols() != self.inputs {
            return Err(BaselineError::Dimension {
                expected: self.inputs,
                got: x.cols(),
            });
        }
        let mut out = Matrix::zeros(x.rows(), self.classes);
        let total = self.trees.len() as f64;
        let mut votes = vec![0usize; self.classes];
        for r in 0..x.rows() {
            votes.iter_mut().for_each(|v| *v = 0);
            for t in &self.trees {
                votes[t.predict(x.row(r))] += 1;
            }
            for (k, &v) in votes.iter().enumerate() {
                out.set(r, k, v as f64 / total);
            }
        }
        Ok(out)
    }
}

/// Bootstrap forest; tree `t` draws from its own stream, so trees can be
/// grown in parallel with identical results.
pub fn train_rf(x: &Matrix, y: &[usize], cfg: &ForestConfig, exec: Execution) -> Result<Forest, BaselineError> {
    check_xy(x, y, cfg.classes)?;
    if cfg.trees == 0 || cfg.min_leaf == 0 {
        return Err(BaselineError::Usage("tree count and min leaf size must be positive".into()));
    }
    let mtry = cfg
        .max_features
        .unwrap_or_else(|| (x.cols() as f64).sqrt().ceil() as usize)
        .max(1);
    let trees = exec.map(cfg.trees, |t| {
        let mut rng = stream(cfg.seed, domain::TREE, t as u64);
        let n = x.rows();
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut b = Builder {
            x,
            y,
            cfg,
            mtry,
            nodes: Vec::new(),
        };
        b.grow(rows, &mut rng);
        Tree { nodes: b.nodes }
    });
    Ok(Forest {
        trees,
        classes: cfg.classes,
        inputs: x.cols(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_concept_is_learned() {
        let mut r = stream(1, 9, 0);
        let gen = |r: &mut StreamRng, n: usize| {
            let x = Matrix::from_fn(n, 3, |_, _| r.random_range(-1.0..1.0));
            let y: Vec<usize> = (0..n).map(|i| usize::from(x.get(i, 0) > 0.0)).collect();
            (x, y)
        };
        let (x, y) = gen(&mut r, 1000);
        let (xt, yt) = gen(&mut r, 1000);
        let cfg = ForestConfig {
            trees: 20,
            classes: 2,
            ..ForestConfig::default()
        };
        let f = train_rf(&x, &y, &cfg, Execution::Parallel).unwrap();
        let p = f.predict_proba(&xt).unwrap();
        let acc = p.argmax_rows().iter().zip(&yt).filter(|(a, b)| a == b).count() as f64 / 1000.0;
        assert!(acc >= 0.95, "{acc}");
        for row in 0..p.rows() {
            assert!((p.row(row).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert_eq!(f, train_rf(&x, &y, &cfg, Execution::Sequential).unwrap());
    }

    #[test]
    fn constant_labels() {
        let x = Matrix::from_fn(10, 2, |i, j| (i * j) as f64);
        let f = train_rf(&x, &[1; 10], &ForestConfig::default(), Execution::Sequential).unwrap();
        let p = f.predict_proba(&x).unwrap();
        assert!((0..10).all(|r| p.get(r, 1) == 1.0));
    }
}
