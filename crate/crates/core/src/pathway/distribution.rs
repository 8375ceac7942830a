use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, DiscreteCDF, Normal, Poisson};

/// Marginal distribution families supported by the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Distribution {
    /// Generalized extreme value. `shape` is ξ in
    /// `F(x) = exp(-(1 + ξ(x-μ)/σ)^(-1/ξ))`; ξ > 0 gives a heavy right tail.
    Gev { location: f64, scale: f64, shape: f64 },
    Normal { mean: f64, std: f64 },
    Uniform { low: f64, high: f64 },
    Poisson { rate: f64 },
    Bernoulli { p: f64 },
    Categorical { categories: Vec<String>, probs: Vec<f64> },
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Φ(z), kept strictly inside (0, 1).
pub(crate) fn normal_cdf(z: f64) -> f64 {
    std_normal().cdf(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

#[cfg(test)]
pub(crate) fn normal_quantile(u: f64) -> f64 {
    std_normal().inverse_cdf(u)
}

impl Distribution {
    /// Parameter problems, if any.
    pub fn validate(&self) -> Result<(), String> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            Distribution::Gev { location, scale, shape } => {
                if !finite(&[*location, *scale, *shape]) || *scale <= 0.0 {
                    return Err("GEV needs finite parameters and scale > 0".into());
                }
            }
            Distribution::Normal { mean, std } => {
                if !finite(&[*mean, *std]) || *std <= 0.0 {
                    return Err("normal needs finite parameters and std > 0".into());
                }
            }
            Distribution::Uniform { low, high } => {
                if !finite(&[*low, *high]) || low >= high {
                    return Err("uniform needs finite low < high".into());
                }
            }
            Distribution::Poisson { rate } => {
                if !rate.is_finite() || *rate <= 0.0 {
                    return Err("poisson needs rate > 0".into());
                }
            }
            Distribution::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err("bernoulli needs 0 <= p <= 1".into());
                }
            }
            Distribution::Categorical { categories, probs } => {
                if categories.is_empty() || categories.len() != probs.len() {
                    return Err("categorical needs one probability per category".into());
                }
                if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err("categorical probabilities must lie in [0, 1]".into());
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(format!("categorical probabilities sum to {total}, not 1"));
                }
                let mut seen = std::collections::HashSet::new();
                if let Some(dup) = categories.iter().find(|c| !seen.insert(c.as_str())) {
                    return Err(format!("duplicate category `{dup}`"));
                }
            }
        }
        Ok(())
    }

    pub fn is_continuous(&self) -> bool {
        matches!(
            self,
            Distribution::Gev { .. } | Distribution::Normal { .. } | Distribution::Uniform { .. }
        )
    }

    /// CDF of numeric families; `None` for categorical.
    pub fn cdf(&self, x: f64) -> Option<f64> {
        Some(match *self {
            Distribution::Gev { location, scale, shape } => gev_cdf(x, location, scale, shape),
            Distribution::Normal { mean, std } => std_normal().cdf((x - mean) / std),
            Distribution::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            Distribution::Poisson { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    Poisson::new(rate).expect("validated").cdf(x.floor() as u64)
                }
            }
            Distribution::Bernoulli { p } => {
                if x < 0.0 {
                    0.0
                } else if x < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            Distribution::Categorical { .. } => return None,
        })
    }

    /// Value of a numeric family at latent `z` (via `u = Φ(z)`).
    pub(crate) fn numeric_from_latent(&self, z: f64) -> f64 {
        match *self {
            Distribution::Normal { mean, std } => mean + std * z,
            Distribution::Gev { location, scale, shape } => {
                gev_quantile(normal_cdf(z), location, scale, shape)
            }
            Distribution::Uniform { low, high } => low + (high - low) * normal_cdf(z),
            Distribution::Poisson { rate } => {
                Poisson::new(rate).expect("validated").inverse_cdf(normal_cdf(z)) as f64
            }
            Distribution::Bernoulli { p } => f64::from(u8::from(normal_cdf(z) > 1.0 - p)),
            Distribution::Categorical { .. } => panic!("categorical has no numeric value"),
        }
    }

    /// Category index at latent `z`; higher latents map to later categories.
    pub(crate) fn category_from_latent(&self, z: f64) -> usize {
        let Distribution::Categorical { probs, .. } = self else {
            panic!("not a categorical distribution");
        };
        let u = normal_cdf(z);
        let mut cum = 0.0;
        for (k, p) in probs.iter().enumerate() {
            cum += p;
            if u < cum {
                return k;
            }
        }
        probs.len() - 1
    }
}

pub(crate) fn gev_cdf(x: f64, mu: f64, sigma: f64, xi: f64) -> f64 {
    let s = (x - mu) / sigma;
    if xi.abs() < 1e-12 {
        return (-(-s).exp()).exp();
    }
    let t = 1.0 + xi * s;
    if t <= 0.0 {
        return if xi > 0.0 { 0.0 } else { 1.0 };
    }
    (-t.powf(-1.0 / xi)).exp()
}

pub(crate) fn gev_quantile(u: f64, mu: f64, sigma: f64, xi: f64) -> f64 {
    let l = -u.ln();
    if xi.abs() < 1e-12 {
        mu - sigma * l.ln()
    } else {
        mu + sigma * (l.powf(-xi) - 1.0) / xi
    }
}
