//! Classification metrics over `K` classes labelled `0..K`.

use super::EvalError;
use crate::grad::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct F1Scores {
    pub per_class: Vec<f64>,
    pub macro_f1: f64,
    /// Per-class F1 weighted by the class frequencies of `y_true`.
    pub weighted_f1: f64,
    pub accuracy: f64,
}

/// Per-class F1 `2TP / (2TP + FP + FN)`, 0 when that denominator is 0.
pub fn f1_scores(y_true: &[usize], y_pred: &[usize], classes: usize) -> Result<F1Scores, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(EvalError::UndefinedMetric("no samples".into()));
    }
    if let Some(&k) = y_true.iter().chain(y_pred).find(|&&k| k >= classes) {
        return Err(EvalError::Argument(format!("label {k} outside 0..{classes}")));
    }
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fneg = vec![0usize; classes];
    let mut support = vec![0usize; classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        support[t] += 1;
        if t == p {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fneg[t] += 1;
        }
    }
    let per_class: Vec<f64> = (0..classes)
        .map(|k| {
            let denom = 2 * tp[k] + fp[k] + fneg[k];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[k] as f64 / denom as f64
            }
        })
        .collect();
    let n = y_true.len() as f64;
    Ok(F1Scores {
        macro_f1: per_class.iter().sum::<f64>() / classes as f64,
        weighted_f1: per_class.iter().zip(&support).map(|(f, &s)| f * s as f64).sum::<f64>() / n,
        accuracy: tp.iter().sum::<usize>() as f64 / n,
        per_class,
    })
}

/// Macro F1 over `classes` labels; 0 for empty input.
pub fn macro_f1(y_true: &[usize], y_pred: &[usize], classes: usize) -> f64 {
    f1_scores(y_true, y_pred, classes).map(|s| s.macro_f1).unwrap_or(0.0)
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub(crate) fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Rank-statistic ROC AUC of `scores` for the positive labels; `None` when
/// either class is empty.
pub fn binary_auc(positive: &[bool], scores: &[f64]) -> Option<f64> {
    assert_eq!(positive.len(), scores.len());
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Macro one-vs-rest AUC over the classes with both positives and negatives.
pub fn auc_ovr_macro(y_true: &[usize], probs: &Matrix) -> Result<f64, EvalError> {
    if y_true.len() != probs.rows() {
        return Err(EvalError::LengthMismatch {
            expected: y_true.len(),
            got: probs.rows(),
        });
    }
    let mut aucs = Vec::new();
    for k in 0..probs.cols() {
        let pos: Vec<bool> = y_true.iter().map(|&t| t == k).collect();
        let col: Vec<f64> = (0..probs.rows()).map(|r| probs.get(r, k)).collect();
        if let Some(a) = binary_auc(&pos, &col) {
            aucs.push(a);
        }
    }
    if aucs.is_empty() {
        return Err(EvalError::UndefinedMetric("no class has both positives and negatives".into()));
    }
    Ok(aucs.iter().sum::<f64>() / aucs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predict_all_first_class() {
        let t = [0, 0, 1, 1, 2, 2];
        let s = f1_scores(&t, &[0; 6], 3).unwrap();
        assert!((s.accuracy - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.per_class[0] - 0.5).abs() < 1e-15);
        assert_eq!(&s.per_class[1..], &[0.0, 0.0]);
        assert!((s.macro_f1 - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn absent_class_scores_zero() {
        let s = f1_scores(&[0, 1, 0], &[0, 1, 0], 3).unwrap();
        assert_eq!(s.per_class, vec![1.0, 1.0, 0.0]);
        assert_eq!(s.accuracy, 1.0);
        assert_eq!(s.weighted_f1, 1.0);
        assert!(f1_scores(&[0], &[0, 1], 3).is_err());
    }

    #[test]
    fn auc_edge_cases() {
        let y = [0, 1, 2, 1];
        let onehot = Matrix::from_fn(4, 3, |r, c| if y[r] == c { 1.0 } else { 0.0 });
        assert_eq!(auc_ovr_macro(&y, &onehot).unwrap(), 1.0);
        assert_eq!(auc_ovr_macro(&y, &Matrix::filled(4, 3, 0.3)).unwrap(), 0.5);
        assert!(auc_ovr_macro(&[1, 1], &Matrix::filled(2, 3, 0.3)).is_err());
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }
}
