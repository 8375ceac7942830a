use std::collections::HashMap;
use std::io::Write;

use crate::grad::Matrix;

/// One embedding row per key (an IRI or a walk token).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    keys: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Matrix,
}

impl EmbeddingTable {
    pub fn new(keys: Vec<String>, vectors: Matrix) -> Self {
        assert_eq!(keys.len(), vectors.rows(), "one row per key");
        assert!(vectors.cols() > 0, "embedding dimension must be positive");
        let index = keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        EmbeddingTable { keys, index, vectors }
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.index.get(key).map(|&i| self.vectors.row(i))
    }

    /// Rows for `keys`, zero rows for keys without an embedding.
    pub fn lookup(&self, keys: &[String]) -> Matrix {
        let mut out = Matrix::zeros(keys.len(), self.dim());
        for (r, k) in keys.iter().enumerate() {
            if let Some(v) = self.get(k) {
                out.row_mut(r).copy_from_slice(v);
            }
        }
        out
    }

    /// CSV with a `key` column followed by `v0..v{d-1}`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["key".to_string()];
        header.extend((0..self.dim()).map(|j| format!("v{j}")));
        w.write_record(&header)?;
        for (i, k) in self.keys.iter().enumerate() {
            let mut row = vec![k.clone()];
            row.extend(self.vectors.row(i).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_and_csv() {
        let t = EmbeddingTable::new(
            vec!["a".into(), "b".into()],
            Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.5]]),
        );
        assert_eq!(t.get("b"), Some(&[3.0, 4.5][..]));
        let m = t.lookup(&["b".into(), "zz".into()]);
        assert_eq!(m.data(), &[3.0, 4.5, 0.0, 0.0]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "key,v0,v1\na,1,2\nb,3,4.5\n");
    }
}
