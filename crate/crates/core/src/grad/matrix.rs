use std::fmt;

use crate::exec::{Execution, REDUCTION_BLOCK};

/// Dense row-major matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix({}x{})", self.rows, self.cols)?;
        if self.data.len() <= 16 {
            write!(f, " {:?}", self.data)?;
        }
        Ok(())
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Panics when `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn scalar(value: f64) -> Self {
        Matrix::from_vec(1, 1, vec![value])
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |r, c| if r == c { 1.0 } else { 0.0 })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[r * c..(r + 1) * c]
    }

    /// Sole entry of a 1x1 matrix.
    pub fn item(&self) -> f64 {
        assert_eq!(self.shape(), (1, 1), "item() on non-scalar matrix");
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in zip_map");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in add_assign");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale_assign(&mut self, s: f64) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Copies the listed rows, in order, into a new matrix.
    pub fn select_rows(&self, index: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(index.len() * self.cols);
        for &i in index {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: index.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn argmax_rows(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|r| {
                let row = self.row(r);
                let mut best = 0;
                for (i, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = i;
                    }
                }
                best
            })
            .collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        self.matmul_with(other, Execution::default())
    }

    /// `self · other`.
    pub fn matmul_with(&self, other: &Matrix, exec: Execution) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul inner dimension mismatch");
        let (k, m) = (self.cols, other.cols);
        let mut out = Matrix::zeros(self.rows, m);
        if m == 0 || k == 0 {
            return out;
        }
        exec.for_each_chunk_mut(&mut out.data, GEMM_ROWS * m, |ci, chunk| {
            let r0 = ci * GEMM_ROWS;
            let a = &self.data[r0 * k..];
            gemm(chunk.len() / m, k, m, a, (k, 1), &other.data, (m, 1), chunk);
        });
        out
    }

    /// `self · otherᵀ`.
    pub fn matmul_nt(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "matmul_nt inner dimension mismatch");
        let (k, m) = (self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, m);
        if m == 0 || k == 0 {
            return out;
        }
        Execution::default().for_each_chunk_mut(&mut out.data, GEMM_ROWS * m, |ci, chunk| {
            let r0 = ci * GEMM_ROWS;
            let a = &self.data[r0 * k..];
            gemm(chunk.len() / m, k, m, a, (k, 1), &other.data, (1, k), chunk);
        });
        out
    }

    /// `selfᵀ · other`, reduced over fixed row blocks so the result does not
    /// depend on the execution mode.
    pub fn matmul_tn(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "matmul_tn row mismatch");
        let (k, m) = (self.cols, other.cols);
        let n = self.rows;
        let mut out = Matrix::zeros(k, m);
        if k == 0 || m == 0 {
            return out;
        }
        let blocks = n.div_ceil(REDUCTION_BLOCK);
        let partial = Execution::default().map(blocks, |b| {
            let start = b * REDUCTION_BLOCK;
            let len = ((b + 1) * REDUCTION_BLOCK).min(n) - start;
            let mut acc = vec![0.0; k * m];
            let a = &self.data[start * k..];
            let bm = &other.data[start * m..];
            gemm(k, len, m, a, (1, k), bm, (m, 1), &mut acc);
            acc
        });
        for acc in partial {
            for (o, a) in out.data.iter_mut().zip(acc) {
                *o += a;
            }
        }
        out
    }
}

/// Rows per independent block of a product. Blocks are the same in both
/// execution modes, so results do not depend on the mode.
const GEMM_ROWS: usize = 256;

/// `c = a · b` for an `n × k` by `k × m` product with the given
/// `(row, column)` strides; `c` is dense row-major `n × m`.
#[allow(clippy::too_many_arguments)]
fn gemm(
    n: usize,
    k: usize,
    m: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    c: &mut [f64],
) {
    if n == 0 {
        return;
    }
    let last = |rs: usize, cs: usize, r: usize, cl: usize| (r - 1) * rs + (cl - 1) * cs;
    assert!(last(rsa, csa, n, k) < a.len(), "gemm lhs out of bounds");
    assert!(last(rsb, csb, k, m) < b.len(), "gemm rhs out of bounds");
    assert!(c.len() >= n * m, "gemm output out of bounds");
    // SAFETY: the asserts above keep every strided access inside the slices.
    unsafe {
        matrixmultiply::dgemm(
            n,
            k,
            m,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            0.0,
            c.as_mut_ptr(),
            m as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_variants_agree() {
        let a = Matrix::from_fn(70, 5, |r, c| (r as f64 * 0.3 - c as f64).sin());
        let b = Matrix::from_fn(5, 9, |r, c| (r * 9 + c) as f64 * 0.01 - 0.2);
        let ab = a.matmul(&b);
        let ab_nt = a.matmul_nt(&b.transpose());
        let ab_tn = a.transpose().transpose().matmul(&b);
        for i in 0..ab.len() {
            assert!((ab.data()[i] - ab_nt.data()[i]).abs() < 1e-12);
            assert!((ab.data()[i] - ab_tn.data()[i]).abs() < 1e-12);
        }
        let at_c = a.matmul_tn(&ab);
        let ref_ = a.transpose().matmul(&ab);
        for i in 0..at_c.len() {
            assert!((at_c.data()[i] - ref_.data()[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn sequential_and_parallel_matmul_identical() {
        let a = Matrix::from_fn(300, 17, |r, c| ((r * 31 + c * 7) % 13) as f64 - 6.0);
        let b = Matrix::from_fn(17, 11, |r, c| ((r * 5 + c) % 7) as f64 * 0.5);
        assert_eq!(
            a.matmul_with(&b, Execution::Sequential),
            a.matmul_with(&b, Execution::Parallel)
        );
    }

    #[test]
    fn argmax_takes_first_maximum() {
        let m = Matrix::from_rows(&[vec![0.2, 0.5, 0.5], vec![1.0, 0.0, 0.0]]);
        assert_eq!(m.argmax_rows(), vec![1, 0]);
    }
}
