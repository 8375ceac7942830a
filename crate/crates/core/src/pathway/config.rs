use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::distribution::Distribution;
use super::events::{Event, State, TransitionMatrix};
use super::PathwayError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
    Binary,
}

/// Monotone dependency on another feature's latent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub feature: String,
    /// Latent correlation, strictly inside (-1, 1).
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub distribution: Distribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<Link>,
    /// Decimal places numeric values are rounded to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decimals: Option<u32>,
}

impl FeatureSpec {
    /// Category labels of a categorical feature, `["0", "1"]` for binary ones.
    pub fn categories(&self) -> Vec<String> {
        match (&self.kind, &self.distribution) {
            (FeatureKind::Categorical, Distribution::Categorical { categories, .. }) => {
                categories.clone()
            }
            (FeatureKind::Binary, _) => vec!["0".into(), "1".into()],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateOverride {
    pub from: String,
    pub to: String,
    pub rate: f64,
}

/// Exponential gap model: the gap before entering `to` from `from` has the
/// given rate per hour; transitions without an override use `default_rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTimeModel {
    pub default_rate: f64,
    #[serde(default)]
    pub rates: Vec<RateOverride>,
}

impl EventTimeModel {
    pub fn constant(rate: f64) -> Self {
        EventTimeModel {
            default_rate: rate,
            rates: Vec::new(),
        }
    }

    pub(crate) fn rate_table(&self) -> Result<[[f64; State::COUNT]; State::COUNT], PathwayError> {
        let check = |field: String, r: f64| {
            if r.is_finite() && r > 0.0 {
                Ok(r)
            } else {
                Err(PathwayError::config(field, format!("rate {r} must be positive")))
            }
        };
        let d = check("event_times.default_rate".into(), self.default_rate)?;
        let mut table = [[d; State::COUNT]; State::COUNT];
        for (i, o) in self.rates.iter().enumerate() {
            let field = format!("event_times.rates[{i}]");
            let from: State = o.from.parse().map_err(|e| PathwayError::config(&field, e))?;
            let to: State = o.to.parse().map_err(|e| PathwayError::config(&field, e))?;
            table[from.index()][to.index()] = check(field, o.rate)?;
        }
        Ok(table)
    }
}

/// Logit shift per unit of a feature's standard-normal latent, relative to BackHome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEffect {
    pub feature: String,
    pub rehabilitation: f64,
    pub death: f64,
}

/// Logit shift when an event occurs in the pathway, relative to BackHome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEffect {
    pub event: Event,
    pub rehabilitation: f64,
    pub death: f64,
}

/// Categorical outcome with BackHome as reference class. Intercepts are
/// solved on a calibration sample so that the marginal proportions match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeModel {
    /// Target marginals in [`Outcome::ALL`](super::Outcome::ALL) order.
    pub proportions: [f64; 3],
    #[serde(default)]
    pub feature_effects: Vec<FeatureEffect>,
    #[serde(default)]
    pub event_effects: Vec<EventEffect>,
    #[serde(default = "default_calibration_sample")]
    pub calibration_sample: usize,
}

fn default_calibration_sample() -> usize {
    20_000
}

fn default_max_walk_steps() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    pub n_patients: usize,
    pub seed: u64,
    pub features: Vec<FeatureSpec>,
    pub transitions: TransitionMatrix,
    pub event_times: EventTimeModel,
    pub outcome: OutcomeModel,
    #[serde(default = "default_max_walk_steps")]
    pub max_walk_steps: usize,
}

const DEFAULT_CONFIG: &str = include_str!("../../../../configs/default_cohort.json");

impl CohortConfig {
    /// The shipped default cohort configuration.
    pub fn default_config() -> Self {
        Self::from_json(DEFAULT_CONFIG).expect("shipped default configuration is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, PathwayError> {
        let config: CohortConfig = serde_json::from_str(text).map_err(|e| {
            // serde wraps TryFrom errors as plain strings
            PathwayError::config("<document>", e.to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, PathwayError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureSpec> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn validate(&self) -> Result<(), PathwayError> {
        let mut index = HashMap::new();
        for (i, f) in self.features.iter().enumerate() {
            let field = format!("features[{i}]");
            if f.name.is_empty() || !f.name.chars().all(|c| c.is_ascii_alphanumeric() || "_.-".contains(c)) {
                return Err(PathwayError::config(field, format!("invalid feature name `{}`", f.name)));
            }
            if index.insert(f.name.as_str(), i).is_some() {
                return Err(PathwayError::config(field, format!("duplicate feature `{}`", f.name)));
            }
            if Event::ALL.iter().any(|e| e.name() == f.name) {
                return Err(PathwayError::config(field, format!("`{}` is an event name", f.name)));
            }
            f.distribution
                .validate()
                .map_err(|r| PathwayError::config(format!("features.{}.distribution", f.name), r))?;
            let family_ok = match f.kind {
                FeatureKind::Numeric => !matches!(
                    f.distribution,
                    Distribution::Categorical { .. } | Distribution::Bernoulli { .. }
                ),
                FeatureKind::Categorical => matches!(f.distribution, Distribution::Categorical { .. }),
                FeatureKind::Binary => matches!(f.distribution, Distribution::Bernoulli { .. }),
            };
            if !family_ok {
                return Err(PathwayError::config(
                    format!("features.{}.distribution", f.name),
                    format!("family does not fit a {:?} feature", f.kind),
                ));
            }
        }
        for f in &self.features {
            if let Some(link) = &f.link {
                let field = format!("features.{}.link", f.name);
                if !index.contains_key(link.feature.as_str()) {
                    return Err(PathwayError::config(field, format!("unknown feature `{}`", link.feature)));
                }
                if !(link.coefficient.abs() < 1.0) {
                    return Err(PathwayError::config(field, "coefficient must lie in (-1, 1)"));
                }
            }
        }
        self.latent_order()?;
        self.transitions.validate()?;
        self.event_times.rate_table()?;
        let o = &self.outcome;
        if o.proportions.iter().any(|p| !(*p > 0.0 && *p < 1.0))
            || (o.proportions.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(PathwayError::config(
                "outcome.proportions",
                "must be three probabilities in (0, 1) summing to 1",
            ));
        }
        for (i, e) in o.feature_effects.iter().enumerate() {
            if !index.contains_key(e.feature.as_str()) {
                return Err(PathwayError::config(
                    format!("outcome.feature_effects[{i}]"),
                    format!("unknown feature `{}`", e.feature),
                ));
            }
        }
        if o.calibration_sample == 0 {
            return Err(PathwayError::config("outcome.calibration_sample", "must be positive"));
        }
        if self.max_walk_steps == 0 {
            return Err(PathwayError::config("max_walk_steps", "must be positive"));
        }
        Ok(())
    }

    /// Feature indices ordered so every linked feature follows its source.
    pub(crate) fn latent_order(&self) -> Result<Vec<usize>, PathwayError> {
        let index: HashMap<&str, usize> =
            self.features.iter().enumerate().map(|(i, f)| (f.name.as_str(), i)).collect();
        let n = self.features.len();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut mark = vec![0u8; n];
        let mut order = Vec::with_capacity(n);
        for start in 0..n {
            let mut chain = Vec::new();
            let mut cur = Some(start);
            while let Some(i) = cur {
                match mark[i] {
                    2 => break,
                    1 => {
                        return Err(PathwayError::config(
                            format!("features.{}.link", self.features[i].name),
                            "linkage forms a cycle",
                        ))
                    }
                    _ => {}
                }
                mark[i] = 1;
                chain.push(i);
                cur = self.features[i]
                    .link
                    .as_ref()
                    .and_then(|l| index.get(l.feature.as_str()).copied());
            }
            for &i in chain.iter().rev() {
                mark[i] = 2;
                order.push(i);
            }
        }
        Ok(order)
    }
}
