use super::KgError;

/// Maps values to `(average rank - 1) / (n - 1)`, ties sharing their average
/// rank. A single value or an all-equal list maps to 0.5.
pub fn quantile_transform(values: &[f64]) -> Result<Vec<f64>, KgError> {
    if values.is_empty() {
        return Err(KgError::Argument("quantile transform of an empty list".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(KgError::Argument("quantile transform of a non-finite value".into()));
    }
    let n = values.len();
    if n == 1 || values.iter().all(|v| *v == values[0]) {
        return Ok(vec![0.5; n]);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // 0-based ranks i..=j share (i + j) / 2
        let q = (i + j) as f64 / 2.0 / (n - 1) as f64;
        for &k in &order[i..=j] {
            out[k] = q;
        }
        i = j + 1;
    }
    Ok(out)
}
