use super::PathwayError;

/// One-sample Kolmogorov–Smirnov statistic of sorted `samples` against `cdf`:
/// `D = max_i max(|F(x_i) - (i-1)/n|, |F(x_i) - i/n|)`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64, PathwayError> {
    if samples.is_empty() {
        return Err(PathwayError::Argument("KS statistic of an empty sample".into()));
    }
    if samples.windows(2).any(|w| w[0] > w[1]) {
        return Err(PathwayError::Argument("KS samples must be sorted".into()));
    }
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((f - hi).abs());
    }
    Ok(d)
}

/// Asymptotic critical value `sqrt(-ln(α/2) / 2) / sqrt(n)`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// True when the sample is consistent with `cdf` at level `alpha`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64, alpha: f64) -> Result<bool, PathwayError> {
    Ok(ks_statistic(samples, cdf)? <= ks_critical_value(samples.len(), alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_against_uniform() {
        let d = ks_statistic(&[0.5], |x| x.clamp(0.0, 1.0)).unwrap();
        assert_eq!(d, 0.5);
    }

    #[test]
    fn quantile_samples_are_close() {
        let n = 200;
        let xs: Vec<f64> = (1..=n).map(|k| k as f64 / (n + 1) as f64).collect();
        let d = ks_statistic(&xs, |x| x).unwrap();
        assert!(d <= 1.0 / (n + 1) as f64 + 1.0 / n as f64);
    }

    #[test]
    fn rejects_empty_and_unsorted() {
        assert!(ks_statistic(&[], |x| x).is_err());
        assert!(ks_statistic(&[0.3, 0.1], |x| x).is_err());
    }

    #[test]
    fn critical_value_at_one_percent() {
        // sqrt(-ln(0.005)/2) = 1.6276
        assert!((ks_critical_value(1, 0.01) - 1.627_6).abs() < 1e-4);
    }
}
