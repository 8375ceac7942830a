use serde::{Deserialize, Serialize};

use super::{GradError, Matrix, ParamStore};

/// Adam hyper-parameters. Weight decay is added to the gradient as `λ·θ`
/// before the moment updates (L2 style, not decoupled).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            weight_decay: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
    step: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &ParamStore) -> Self {
        let first: Vec<Matrix> = params
            .iter()
            .map(|(_, _, m)| Matrix::zeros(m.rows(), m.cols()))
            .collect();
        Adam {
            config,
            second: first.clone(),
            first,
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update of every parameter. `grads[i]` belongs to
    /// parameter `i` of the store.
    pub fn step(&mut self, params: &mut ParamStore, grads: &[Matrix]) -> Result<(), GradError> {
        if grads.len() != params.len() || self.first.len() != params.len() {
            return Err(GradError::ShapeMismatch {
                name: "<parameter count>".into(),
                expected: (params.len(), 1),
                got: (grads.len(), 1),
            });
        }
        for (id, g) in params.ids().zip(grads) {
            let p = params.get(id);
            if p.shape() != g.shape() || self.first[id.index()].shape() != p.shape() {
                return Err(GradError::ShapeMismatch {
                    name: params.name(id).to_string(),
                    expected: p.shape(),
                    got: g.shape(),
                });
            }
            if !g.is_finite() {
                return Err(GradError::NonFinite {
                    context: format!("gradient of `{}`", params.name(id)),
                });
            }
        }
        self.step += 1;
        let AdamConfig {
            lr,
            weight_decay,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (id, g) in params.ids().collect::<Vec<_>>().into_iter().zip(grads) {
            let i = id.index();
            let m = self.first[i].data_mut();
            let v = self.second[i].data_mut();
            let theta = params.get_mut(id).data_mut();
            for j in 0..theta.len() {
                let grad = g.data()[j] + weight_decay * theta[j];
                m[j] = beta1 * m[j] + (1.0 - beta1) * grad;
                v[j] = beta2 * v[j] + (1.0 - beta2) * grad * grad;
                let mhat = m[j] / c1;
                let vhat = v[j] / c2;
                theta[j] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grad::ParamId;

    fn store(values: Vec<f64>) -> ParamStore {
        let mut s = ParamStore::new();
        s.add("w", Matrix::from_vec(1, values.len(), values));
        s
    }

    #[test]
    fn zero_gradient_without_decay_leaves_params() {
        let mut p = store(vec![0.5, -1.0, 2.0]);
        let cfg = AdamConfig {
            weight_decay: 0.0,
            ..AdamConfig::default()
        };
        let mut adam = Adam::new(cfg, &p);
        for _ in 0..5 {
            adam.step(&mut p, &[Matrix::zeros(1, 3)]).unwrap();
        }
        assert_eq!(p.get(ParamId(0)).data(), &[0.5, -1.0, 2.0]);
    }

    #[test]
    fn first_step_magnitude_is_bounded_by_lr() {
        let init = vec![0.5, -1.0, 2.0, 0.0];
        let g = vec![3.0, -0.01, 1e-6, 250.0];
        let mut p = store(init.clone());
        let cfg = AdamConfig {
            weight_decay: 0.0,
            ..AdamConfig::default()
        };
        let mut adam = Adam::new(cfg, &p);
        adam.step(&mut p, &[Matrix::from_vec(1, 4, g.clone())]).unwrap();
        for j in 0..4 {
            let delta = (p.get(ParamId(0)).data()[j] - init[j]).abs();
            // at t = 1, m̂ = g and v̂ = g², so |Δ| = lr·|g| / (|g| + ε)
            let expected = cfg.lr * g[j].abs() / (g[j].abs() + cfg.eps);
            assert!((delta - expected).abs() < 1e-15, "{delta} vs {expected}");
            assert!(delta <= cfg.lr);
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut p = store(vec![1.0, 2.0]);
        let mut adam = Adam::new(AdamConfig::default(), &p);
        let err = adam.step(&mut p, &[Matrix::zeros(2, 1)]).unwrap_err();
        assert!(matches!(err, GradError::ShapeMismatch { .. }));
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut p = store(vec![1.0]);
        let mut adam = Adam::new(AdamConfig::default(), &p);
        let err = adam
            .step(&mut p, &[Matrix::from_vec(1, 1, vec![f64::NAN])])
            .unwrap_err();
        assert!(matches!(err, GradError::NonFinite { .. }));
    }

    #[test]
    fn identical_runs_have_identical_trajectories() {
        let run = || {
            let mut p = store(vec![0.3, -0.7]);
            let mut adam = Adam::new(AdamConfig::default(), &p);
            for k in 0..20 {
                let w = p.get(ParamId(0)).clone();
                let g = w.map(|x| 2.0 * x + k as f64 * 0.01);
                adam.step(&mut p, &[g]).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }
}
