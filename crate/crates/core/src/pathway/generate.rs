use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use super::config::{CohortConfig, EventTimeModel, FeatureKind};
use super::events::{Event, State, TransitionMatrix};
use super::PathwayError;
use crate::exec::Execution;
use crate::rng::{domain, stream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    BackHome,
    Rehabilitation,
    Death,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::BackHome, Outcome::Rehabilitation, Outcome::Death];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Outcome> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Outcome::BackHome => "BackHome",
            Outcome::Rehabilitation => "Rehabilitation",
            Outcome::Death => "Death",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| format!("unknown outcome `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureValue {
    Numeric(f64),
    Category(String),
    Binary(bool),
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureValue::Numeric(v) => write!(f, "{v}"),
            FeatureValue::Category(c) => f.write_str(c),
            FeatureValue::Binary(b) => f.write_str(if *b { "1" } else { "0" }),
        }
    }
}

/// One synthetic patient.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub id: String,
    /// Non-temporal features in configuration order.
    pub features: Vec<(String, FeatureValue)>,
    /// Distinct events with hours from admission, strictly increasing.
    pub events: Vec<(Event, f64)>,
    pub outcome: Outcome,
}

impl PatientRecord {
    pub fn feature(&self, name: &str) -> Option<&FeatureValue> {
        self.features.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn event_time(&self, event: Event) -> Option<f64> {
        self.events.iter().find(|(e, _)| *e == event).map(|(_, t)| *t)
    }

    pub fn has_event(&self, event: Event) -> bool {
        self.event_time(event).is_some()
    }
}

pub(crate) fn patient_id(index: usize) -> String {
    format!("p{index:06}")
}

fn round_to(v: f64, decimals: u32) -> f64 {
    let k = 10f64.powi(decimals as i32);
    (v * k).round() / k
}

const TIME_RESOLUTION: f64 = 0.01;

fn walk(
    tm: &TransitionMatrix,
    rates: &[[f64; State::COUNT]; State::COUNT],
    max_steps: usize,
    rng: &mut StreamRng,
) -> Result<Vec<(Event, f64)>, PathwayError> {
    let mut state = State::Start;
    let mut time = 0.0f64;
    let mut seen = [false; 8];
    let mut out = Vec::new();
    for _ in 0..max_steps {
        let row = tm.row(state);
        let u: f64 = rng.random();
        let mut cum = 0.0;
        let mut next = State::End;
        for (j, p) in row.iter().enumerate() {
            cum += p;
            if *p > 0.0 && u < cum {
                next = State::from_index(j);
                break;
            }
        }
        if cum <= u {
            // rounding left u above the last cumulative sum
            let last = row.iter().rposition(|p| *p > 0.0).expect("stochastic row");
            next = State::from_index(last);
        }
        let State::Event(e) = next else {
            return Ok(out);
        };
        let rate = rates[state.index()][next.index()];
        let gap: f64 = rng.sample(Exp::new(rate).expect("validated rate"));
        let prev = time;
        time = round_to(time + gap, 2).max(prev + TIME_RESOLUTION);
        // non-first administrations keep the clock running but are not recorded
        if !seen[e.index()] {
            seen[e.index()] = true;
            out.push((e, time));
        }
        state = next;
    }
    Err(PathwayError::WalkTooLong { limit: max_steps })
}

/// One START→…→END walk with START/END stripped and repeats collapsed to
/// their first occurrence. Times are hours from admission, rounded to 0.01.
pub fn sample_event_sequence(
    tm: &TransitionMatrix,
    time_model: &EventTimeModel,
    max_steps: usize,
    rng: &mut StreamRng,
) -> Result<Vec<(Event, f64)>, PathwayError> {
    walk(tm, &time_model.rate_table()?, max_steps, rng)
}

struct Draw {
    latents: Vec<f64>,
    events: Vec<(Event, f64)>,
}

struct Plan<'a> {
    config: &'a CohortConfig,
    order: Vec<usize>,
    link_of: Vec<Option<(usize, f64)>>,
    rates: [[f64; State::COUNT]; State::COUNT],
}

impl<'a> Plan<'a> {
    fn new(config: &'a CohortConfig) -> Result<Self, PathwayError> {
        config.validate()?;
        let link_of = config
            .features
            .iter()
            .map(|f| {
                f.link.as_ref().map(|l| {
                    let j = config.features.iter().position(|g| g.name == l.feature).expect("validated");
                    (j, l.coefficient)
                })
            })
            .collect();
        Ok(Plan {
            config,
            order: config.latent_order()?,
            link_of,
            rates: config.event_times.rate_table()?,
        })
    }

    fn draw(&self, rng: &mut StreamRng) -> Result<Draw, PathwayError> {
        let mut latents = vec![0.0; self.config.features.len()];
        for &i in &self.order {
            let eps: f64 = rng.sample(StandardNormal);
            latents[i] = match self.link_of[i] {
                Some((j, rho)) => rho * latents[j] + (1.0 - rho * rho).sqrt() * eps,
                None => eps,
            };
        }
        let events = walk(&self.config.transitions, &self.rates, self.config.max_walk_steps, rng)?;
        Ok(Draw { latents, events })
    }

    /// Logits of (BackHome, Rehabilitation, Death) before intercepts.
    fn partial_logits(&self, d: &Draw) -> [f64; 3] {
        let o = &self.config.outcome;
        let mut l = [0.0; 3];
        for e in &o.feature_effects {
            let i = self.config.features.iter().position(|f| f.name == e.feature).expect("validated");
            l[1] += e.rehabilitation * d.latents[i];
            l[2] += e.death * d.latents[i];
        }
        for e in &o.event_effects {
            if d.events.iter().any(|(ev, _)| *ev == e.event) {
                l[1] += e.rehabilitation;
                l[2] += e.death;
            }
        }
        l
    }

    fn values(&self, d: &Draw) -> Vec<(String, FeatureValue)> {
        self.config
            .features
            .iter()
            .zip(&d.latents)
            .map(|(f, &z)| {
                let v = match f.kind {
                    FeatureKind::Numeric => {
                        let x = f.distribution.numeric_from_latent(z);
                        FeatureValue::Numeric(f.decimals.map_or(x, |k| round_to(x, k)))
                    }
                    FeatureKind::Binary => FeatureValue::Binary(f.distribution.numeric_from_latent(z) == 1.0),
                    FeatureKind::Categorical => {
                        FeatureValue::Category(f.categories()[f.distribution.category_from_latent(z)].clone())
                    }
                };
                (f.name.clone(), v)
            })
            .collect()
    }
}

fn softmax3(l: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    let x = [l[0] + b[0], l[1] + b[1], l[2] + b[2]];
    let m = x[0].max(x[1]).max(x[2]);
    let e = x.map(|v| (v - m).exp());
    let s = e[0] + e[1] + e[2];
    e.map(|v| v / s)
}

fn solve_intercepts(logits: &[[f64; 3]], target: [f64; 3]) -> [f64; 3] {
    let mut b = [0.0f64; 3];
    for _ in 0..10_000 {
        let mut mean = [0.0; 3];
        for l in logits {
            let p = softmax3(*l, b);
            for k in 0..3 {
                mean[k] += p[k];
            }
        }
        let n = logits.len() as f64;
        let mut delta = 0.0f64;
        for k in 0..3 {
            let step = (target[k] / (mean[k] / n)).ln();
            b[k] += step;
            delta = delta.max(step.abs());
        }
        let b0 = b[0];
        b = b.map(|v| v - b0);
        if delta < 1e-12 {
            break;
        }
    }
    b
}

/// Outcome intercepts that reproduce the configured marginals on a
/// calibration sample drawn from dedicated streams. The result does not
/// depend on `n_patients`.
pub fn calibrate_intercepts(config: &CohortConfig, exec: Execution) -> Result<[f64; 3], PathwayError> {
    let plan = Plan::new(config)?;
    let m = config.outcome.calibration_sample;
    let logits: Result<Vec<[f64; 3]>, PathwayError> = exec
        .map(m, |i| {
            let mut rng = stream(config.seed, domain::CALIBRATION, i as u64);
            plan.draw(&mut rng).map(|d| plan.partial_logits(&d))
        })
        .into_iter()
        .collect();
    Ok(solve_intercepts(&logits?, config.outcome.proportions))
}

pub fn generate_cohort(config: &CohortConfig) -> Result<Vec<PatientRecord>, PathwayError> {
    generate_cohort_with(config, Execution::default())
}

/// Patient `i` depends only on `(seed, i)` and the calibrated intercepts, so
/// the cohort is identical under sequential and parallel execution.
pub fn generate_cohort_with(config: &CohortConfig, exec: Execution) -> Result<Vec<PatientRecord>, PathwayError> {
    let plan = Plan::new(config)?;
    if config.n_patients == 0 {
        return Ok(Vec::new());
    }
    let intercepts = calibrate_intercepts(config, exec)?;
    exec.map(config.n_patients, |i| {
        let mut rng = stream(config.seed, domain::PATIENT, i as u64);
        let d = plan.draw(&mut rng)?;
        let p = softmax3(plan.partial_logits(&d), intercepts);
        let u: f64 = rng.random();
        let outcome = if u < p[0] {
            Outcome::BackHome
        } else if u < p[0] + p[1] {
            Outcome::Rehabilitation
        } else {
            Outcome::Death
        };
        Ok(PatientRecord {
            id: patient_id(i),
            features: plan.values(&d),
            events: d.events,
            outcome,
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn degenerate_matrix_gives_single_event() {
        let tm = TransitionMatrix::from_entries(&[
            (State::Start, State::Event(Event::Nimodipine), 1.0),
            (State::Event(Event::Nimodipine), State::End, 1.0),
        ])
        .unwrap();
        let mut rng = StreamRng::seed_from_u64(3);
        for _ in 0..50 {
            let seq = sample_event_sequence(&tm, &EventTimeModel::constant(0.5), 64, &mut rng).unwrap();
            assert_eq!(seq.len(), 1);
            assert_eq!(seq[0].0, Event::Nimodipine);
            assert!(seq[0].1 > 0.0);
        }
    }

    #[test]
    fn cyclic_matrix_hits_the_step_guard() {
        let tm = TransitionMatrix::from_entries(&[
            (State::Start, State::Event(Event::Nad), 1.0),
            (State::Event(Event::Nad), State::Event(Event::Iot), 1.0),
            (State::Event(Event::Iot), State::Event(Event::Nad), 1.0),
        ])
        .unwrap();
        let mut rng = StreamRng::seed_from_u64(3);
        let err = sample_event_sequence(&tm, &EventTimeModel::constant(1.0), 64, &mut rng).unwrap_err();
        assert!(matches!(err, PathwayError::WalkTooLong { limit: 64 }));
    }

    #[test]
    fn intercepts_hit_target_marginals() {
        let logits: Vec<[f64; 3]> = (0..100).map(|i| [0.0, (i as f64 / 25.0).sin(), i as f64 / 50.0]).collect();
        let b = solve_intercepts(&logits, [0.5, 0.3, 0.2]);
        let mut mean = [0.0; 3];
        for l in &logits {
            let p = softmax3(*l, b);
            for k in 0..3 {
                mean[k] += p[k] / 100.0;
            }
        }
        for (m, t) in mean.iter().zip([0.5, 0.3, 0.2]) {
            assert!((m - t).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_and_deterministic_cohorts() {
        let mut c = CohortConfig::default_config();
        c.n_patients = 0;
        assert!(generate_cohort(&c).unwrap().is_empty());
        c.n_patients = 50;
        c.outcome.calibration_sample = 500;
        let a = generate_cohort_with(&c, Execution::Sequential).unwrap();
        let b = generate_cohort_with(&c, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        c.n_patients = 20;
        assert_eq!(&a[..20], &generate_cohort(&c).unwrap()[..]);
    }
}
