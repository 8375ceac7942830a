//! Tape-based reverse-mode differentiation over [`Matrix`] values.

use std::sync::Arc;

use super::sparse::{RelationalAdjacency, SparseRows};
use super::{GradError, Matrix, ParamId, ParamStore};
use crate::exec::Execution;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Offset(Var),
    Tanh(Var),
    Relu(Var),
    Prelu(Var, Var),
    LogSigmoid(Var),
    SoftmaxCrossEntropy {
        logits: Var,
        targets: Arc<Vec<usize>>,
        probs: Matrix,
    },
    L1Rows(Var),
    RowDot(Var, Var),
    GatherRows(Var, Arc<Vec<usize>>),
    ScatterAddRows(Var, Arc<Vec<usize>>),
    Sparse(Var, Arc<SparseRows>),
    RelationalAggregate {
        input: Var,
        coeff: Var,
        adjacency: Arc<RelationalAdjacency>,
    },
    Mean(Var),
    Sum(Var),
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
}

/// Records a forward computation for a later [`Tape::backward`].
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Result of a backward pass.
#[derive(Debug)]
pub struct Gradients {
    nodes: Vec<Option<Matrix>>,
    params: Vec<(ParamId, usize)>,
}

impl Gradients {
    /// Gradient of the loss with respect to any recorded value.
    pub fn wrt(&self, var: Var) -> Option<&Matrix> {
        self.nodes[var.0].as_ref()
    }

    /// Gradient for every parameter of `store`, zero where unreached.
    pub fn for_params(&self, store: &ParamStore) -> Vec<Matrix> {
        let mut out: Vec<Matrix> = store
            .iter()
            .map(|(_, _, m)| Matrix::zeros(m.rows(), m.cols()))
            .collect();
        for &(id, node) in &self.params {
            if let Some(g) = &self.nodes[node] {
                out[id.index()].add_assign(g);
            }
        }
        out
    }
}

fn accumulate(slot: &mut Option<Matrix>, g: Matrix) {
    match slot {
        Some(acc) => acc.add_assign(&g),
        None => *slot = Some(g),
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    /// A constant (or input) value. Its gradient is still reported by
    /// [`Gradients::wrt`].
    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push(store.get(id).clone(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        self.push(v, Op::Sub(a, b))
    }

    /// Element-wise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.push(v, Op::Mul(a, b))
    }

    /// `x + 1·bᵀ`: adds the `1 × m` row `b` to every row of `x`.
    pub fn add_row(&mut self, x: Var, b: Var) -> Var {
        let bias = self.value(b);
        assert_eq!(bias.rows(), 1, "add_row expects a 1-row bias");
        assert_eq!(bias.cols(), self.value(x).cols(), "add_row width mismatch");
        let mut v = self.value(x).clone();
        let bias = bias.row(0).to_vec();
        for r in 0..v.rows() {
            for (o, b) in v.row_mut(r).iter_mut().zip(&bias) {
                *o += b;
            }
        }
        self.push(v, Op::AddRow(x, b))
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        let v = self.value(x).map(|a| a * s);
        self.push(v, Op::Scale(x, s))
    }

    /// Adds the constant `c` to every entry.
    pub fn offset(&mut self, x: Var, c: f64) -> Var {
        let v = self.value(x).map(|a| a + c);
        self.push(v, Op::Offset(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::tanh);
        self.push(v, Op::Tanh(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let v = self.value(x).map(|a| a.max(0.0));
        self.push(v, Op::Relu(x))
    }

    /// `y = x` where `x > 0`, else `a·x`, with `a` a learnable `1 × 1` slope.
    pub fn prelu(&mut self, x: Var, slope: Var) -> Var {
        let a = self.value(slope).item();
        let v = self.value(x).map(|z| if z > 0.0 { z } else { a * z });
        self.push(v, Op::Prelu(x, slope))
    }

    /// `log σ(x)`, computed stably.
    pub fn log_sigmoid(&mut self, x: Var) -> Var {
        let v = self.value(x).map(log_sigmoid);
        self.push(v, Op::LogSigmoid(x))
    }

    /// Mean over rows of `−log softmax(logits)[target]`, as a `1 × 1` value.
    pub fn softmax_cross_entropy(&mut self, logits: Var, targets: Arc<Vec<usize>>) -> Var {
        let l = self.value(logits);
        assert_eq!(l.rows(), targets.len(), "one target per logit row");
        let probs = softmax_rows(l);
        let n = targets.len().max(1) as f64;
        let loss: f64 = targets
            .iter()
            .enumerate()
            .map(|(r, &k)| -log_softmax_entry(l.row(r), k))
            .sum::<f64>()
            / n;
        self.push(
            Matrix::scalar(loss),
            Op::SoftmaxCrossEntropy {
                logits,
                targets,
                probs,
            },
        )
    }

    /// Row-wise L1 norms, `n × 1`.
    pub fn l1_rows(&mut self, x: Var) -> Var {
        let m = self.value(x);
        let v = Matrix::from_fn(m.rows(), 1, |r, _| m.row(r).iter().map(|a| a.abs()).sum());
        self.push(v, Op::L1Rows(x))
    }

    /// Row-wise dot products, `n × 1`.
    pub fn row_dot(&mut self, a: Var, b: Var) -> Var {
        let (ma, mb) = (self.value(a), self.value(b));
        assert_eq!(ma.shape(), mb.shape(), "row_dot shape mismatch");
        let v = Matrix::from_fn(ma.rows(), 1, |r, _| {
            ma.row(r).iter().zip(mb.row(r)).map(|(x, y)| x * y).sum()
        });
        self.push(v, Op::RowDot(a, b))
    }

    pub fn gather_rows(&mut self, x: Var, index: Arc<Vec<usize>>) -> Var {
        let v = self.value(x).select_rows(&index);
        self.push(v, Op::GatherRows(x, index))
    }

    /// `out[index[i]] += x[i]` into an `n_out`-row result.
    pub fn scatter_add_rows(&mut self, x: Var, index: Arc<Vec<usize>>, n_out: usize) -> Var {
        let m = self.value(x);
        assert_eq!(m.rows(), index.len(), "one index per row");
        let mut out = Matrix::zeros(n_out, m.cols());
        for (i, &t) in index.iter().enumerate() {
            for (o, a) in out.row_mut(t).iter_mut().zip(m.row(i)) {
                *o += a;
            }
        }
        self.push(out, Op::ScatterAddRows(x, index))
    }

    /// `A · x` for a constant sparse `A`.
    pub fn sparse_matmul(&mut self, a: Arc<SparseRows>, x: Var) -> Var {
        let v = apply_csr(&a.forward, self.value(x), a.rows());
        self.push(v, Op::Sparse(x, a))
    }

    /// Per-relation mean aggregation with basis coefficients.
    ///
    /// `input` is `n_src × d`, `coeff` is `R × B`. The result is
    /// `n_tgt × (B·d)`; block `b` of row `i` is
    /// `Σ_r coeff[r, b] · mean_{j ∈ N_i^r} input[j]`.
    pub fn relational_aggregate(
        &mut self,
        input: Var,
        coeff: Var,
        adjacency: Arc<RelationalAdjacency>,
    ) -> Var {
        let h = self.value(input);
        let c = self.value(coeff);
        assert_eq!(h.rows(), adjacency.sources(), "aggregate source count mismatch");
        assert_eq!(c.rows(), adjacency.relations(), "one coefficient row per relation");
        let (d, bases) = (h.cols(), c.cols());
        let width = d * bases;
        let mut out = Matrix::zeros(adjacency.targets(), width);
        if width > 0 {
            Execution::default().for_each_chunk_mut(out.data_mut(), 32 * width, |ci, chunk| {
                for (lr, orow) in chunk.chunks_mut(width).enumerate() {
                    for e in adjacency.forward.row(ci * 32 + lr) {
                        let src = h.row(e.index);
                        let crow = c.row(e.relation);
                        for (b, &cb) in crow.iter().enumerate() {
                            let w = cb * e.weight;
                            for (o, &x) in orow[b * d..(b + 1) * d].iter_mut().zip(src) {
                                *o += w * x;
                            }
                        }
                    }
                }
            });
        }
        self.push(
            out,
            Op::RelationalAggregate {
                input,
                coeff,
                adjacency,
            },
        )
    }

    /// Mean of all entries, `1 × 1`.
    pub fn mean(&mut self, x: Var) -> Var {
        let m = self.value(x);
        let v = m.sum() / m.len().max(1) as f64;
        self.push(Matrix::scalar(v), Op::Mean(x))
    }

    /// Sum of all entries, `1 × 1`.
    pub fn sum(&mut self, x: Var) -> Var {
        let v = self.value(x).sum();
        self.push(Matrix::scalar(v), Op::Sum(x))
    }

    /// Stacks the parts vertically (equal column counts).
    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let cols = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let m = self.value(p);
            assert_eq!(m.cols(), cols, "concat_rows width mismatch");
            data.extend_from_slice(m.data());
            rows += m.rows();
        }
        self.push(Matrix::from_vec(rows, cols, data), Op::ConcatRows(parts.to_vec()))
    }

    /// Places the parts side by side (equal row counts).
    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows();
        let widths: Vec<usize> = parts.iter().map(|&p| self.value(p).cols()).collect();
        let total: usize = widths.iter().sum();
        let mut out = Matrix::zeros(rows, total);
        let mut off = 0;
        for (&p, &w) in parts.iter().zip(&widths) {
            let m = self.value(p);
            assert_eq!(m.rows(), rows, "concat_cols height mismatch");
            for r in 0..rows {
                out.row_mut(r)[off..off + w].copy_from_slice(m.row(r));
            }
            off += w;
        }
        self.push(out, Op::ConcatCols(parts.to_vec()))
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients, GradError> {
        let lv = self.value(loss);
        if lv.shape() != (1, 1) {
            return Err(GradError::NonScalarLoss {
                rows: lv.rows(),
                cols: lv.cols(),
            });
        }
        if !lv.is_finite() {
            return Err(GradError::NonFinite {
                context: "loss".into(),
            });
        }
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::scalar(1.0));
        let mut params = Vec::new();
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            self.propagate(&node.op, &node.value, &g, &mut grads);
            if let Op::Param(id) = node.op {
                params.push((id, idx));
            }
            grads[idx] = Some(g);
        }
        Ok(Gradients {
            nodes: grads,
            params,
        })
    }

    fn propagate(&self, op: &Op, out: &Matrix, g: &Matrix, grads: &mut [Option<Matrix>]) {
        match op {
            Op::Leaf | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                accumulate(&mut grads[a.0], g.matmul_nt(self.value(*b)));
                accumulate(&mut grads[b.0], self.value(*a).matmul_tn(g));
            }
            Op::Add(a, b) => {
                accumulate(&mut grads[a.0], g.clone());
                accumulate(&mut grads[b.0], g.clone());
            }
            Op::Sub(a, b) => {
                accumulate(&mut grads[a.0], g.clone());
                accumulate(&mut grads[b.0], g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                accumulate(&mut grads[a.0], g.zip_map(self.value(*b), |x, y| x * y));
                accumulate(&mut grads[b.0], g.zip_map(self.value(*a), |x, y| x * y));
            }
            Op::AddRow(x, b) => {
                let mut db = Matrix::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for (o, v) in db.row_mut(0).iter_mut().zip(g.row(r)) {
                        *o += v;
                    }
                }
                accumulate(&mut grads[x.0], g.clone());
                accumulate(&mut grads[b.0], db);
            }
            Op::Scale(x, s) => accumulate(&mut grads[x.0], g.map(|v| v * s)),
            Op::Offset(x) => accumulate(&mut grads[x.0], g.clone()),
            Op::Tanh(x) => accumulate(&mut grads[x.0], g.zip_map(out, |gv, y| gv * (1.0 - y * y))),
            Op::Relu(x) => {
                let xv = self.value(*x);
                accumulate(&mut grads[x.0], g.zip_map(xv, |gv, z| if z > 0.0 { gv } else { 0.0 }));
            }
            Op::Prelu(x, slope) => {
                let xv = self.value(*x);
                let a = self.value(*slope).item();
                let dx = g.zip_map(xv, |gv, z| if z > 0.0 { gv } else { a * gv });
                let da: f64 = g
                    .data()
                    .iter()
                    .zip(xv.data())
                    .map(|(gv, &z)| if z > 0.0 { 0.0 } else { gv * z })
                    .sum();
                accumulate(&mut grads[x.0], dx);
                accumulate(&mut grads[slope.0], Matrix::scalar(da));
            }
            Op::LogSigmoid(x) => {
                let xv = self.value(*x);
                accumulate(&mut grads[x.0], g.zip_map(xv, |gv, z| gv * sigmoid(-z)));
            }
            Op::SoftmaxCrossEntropy {
                logits,
                targets,
                probs,
            } => {
                let scale = g.item() / targets.len().max(1) as f64;
                let mut d = probs.clone();
                for (r, &k) in targets.iter().enumerate() {
                    let row = d.row_mut(r);
                    row[k] -= 1.0;
                    for v in row.iter_mut() {
                        *v *= scale;
                    }
                }
                accumulate(&mut grads[logits.0], d);
            }
            Op::L1Rows(x) => {
                let xv = self.value(*x);
                let mut d = Matrix::zeros(xv.rows(), xv.cols());
                for r in 0..xv.rows() {
                    let gr = g.get(r, 0);
                    for (o, &z) in d.row_mut(r).iter_mut().zip(xv.row(r)) {
                        *o = gr * sign(z);
                    }
                }
                accumulate(&mut grads[x.0], d);
            }
            Op::RowDot(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let mut da = bv.clone();
                let mut db = av.clone();
                for r in 0..av.rows() {
                    let gr = g.get(r, 0);
                    da.row_mut(r).iter_mut().for_each(|v| *v *= gr);
                    db.row_mut(r).iter_mut().for_each(|v| *v *= gr);
                }
                accumulate(&mut grads[a.0], da);
                accumulate(&mut grads[b.0], db);
            }
            Op::GatherRows(x, index) => {
                let xv = self.value(*x);
                let mut d = Matrix::zeros(xv.rows(), xv.cols());
                for (i, &src) in index.iter().enumerate() {
                    for (o, v) in d.row_mut(src).iter_mut().zip(g.row(i)) {
                        *o += v;
                    }
                }
                accumulate(&mut grads[x.0], d);
            }
            Op::ScatterAddRows(x, index) => {
                accumulate(&mut grads[x.0], g.select_rows(index));
            }
            Op::Sparse(x, a) => {
                accumulate(&mut grads[x.0], apply_csr(&a.backward, g, a.cols()));
            }
            Op::RelationalAggregate {
                input,
                coeff,
                adjacency,
            } => {
                let h = self.value(*input);
                let c = self.value(*coeff);
                let (dh, dc) = relational_backward(h, c, adjacency, g);
                accumulate(&mut grads[input.0], dh);
                accumulate(&mut grads[coeff.0], dc);
            }
            Op::Mean(x) => {
                let xv = self.value(*x);
                let s = g.item() / xv.len().max(1) as f64;
                accumulate(&mut grads[x.0], Matrix::filled(xv.rows(), xv.cols(), s));
            }
            Op::Sum(x) => {
                let xv = self.value(*x);
                accumulate(&mut grads[x.0], Matrix::filled(xv.rows(), xv.cols(), g.item()));
            }
            Op::ConcatRows(parts) => {
                let cols = g.cols();
                let mut r0 = 0;
                for p in parts {
                    let rows = self.value(*p).rows();
                    let d = Matrix::from_vec(rows, cols, g.data()[r0 * cols..(r0 + rows) * cols].to_vec());
                    accumulate(&mut grads[p.0], d);
                    r0 += rows;
                }
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for p in parts {
                    let w = self.value(*p).cols();
                    let d = Matrix::from_fn(g.rows(), w, |r, c| g.get(r, off + c));
                    accumulate(&mut grads[p.0], d);
                    off += w;
                }
            }
        }
    }
}

fn apply_csr(csr: &super::sparse::Csr, x: &Matrix, n_out: usize) -> Matrix {
    let d = x.cols();
    let mut out = Matrix::zeros(n_out, d);
    if d == 0 {
        return out;
    }
    Execution::default().for_each_chunk_mut(out.data_mut(), 64 * d, |ci, chunk| {
        for (lr, orow) in chunk.chunks_mut(d).enumerate() {
            for e in csr.row(ci * 64 + lr) {
                for (o, &v) in orow.iter_mut().zip(x.row(e.index)) {
                    *o += e.weight * v;
                }
            }
        }
    });
    out
}

fn relational_backward(
    h: &Matrix,
    c: &Matrix,
    adj: &RelationalAdjacency,
    g: &Matrix,
) -> (Matrix, Matrix) {
    let (d, bases) = (h.cols(), c.cols());
    let mut dh = Matrix::zeros(h.rows(), d);
    if d > 0 {
        Execution::default().for_each_chunk_mut(dh.data_mut(), 32 * d, |ci, chunk| {
            for (lr, drow) in chunk.chunks_mut(d).enumerate() {
                for e in adj.backward.row(ci * 32 + lr) {
                    let grow = g.row(e.index);
                    let crow = c.row(e.relation);
                    for (b, &cb) in crow.iter().enumerate() {
                        let w = cb * e.weight;
                        for (o, &gv) in drow.iter_mut().zip(&grow[b * d..(b + 1) * d]) {
                            *o += w * gv;
                        }
                    }
                }
            }
        });
    }
    // dC[r, b] = Σ_edges weight · ⟨g[target, block b], h[source]⟩, reduced per
    // fixed block of targets.
    let targets = adj.targets();
    let block = crate::exec::REDUCTION_BLOCK;
    let partial = Execution::default().map(targets.div_ceil(block), |bi| {
        let mut acc = vec![0.0; c.rows() * bases];
        for t in bi * block..((bi + 1) * block).min(targets) {
            let grow = g.row(t);
            for e in adj.forward.row(t) {
                let src = h.row(e.index);
                for b in 0..bases {
                    let dot: f64 = grow[b * d..(b + 1) * d]
                        .iter()
                        .zip(src)
                        .map(|(x, y)| x * y)
                        .sum();
                    acc[e.relation * bases + b] += e.weight * dot;
                }
            }
        }
        acc
    });
    let mut dc = Matrix::zeros(c.rows(), bases);
    for acc in partial {
        for (o, a) in dc.data_mut().iter_mut().zip(acc) {
            *o += a;
        }
    }
    (dh, dc)
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn log_softmax_entry(row: &[f64], k: usize) -> f64 {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    row[k] - lse
}

/// Row-wise softmax.
pub fn softmax_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}
