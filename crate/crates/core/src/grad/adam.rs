use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 0.01, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moment estimates for one parameter buffer.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self { m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }
}

/// One bias-corrected Adam descent step, in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::ShapeMismatch(format!("{} params, {} grads", params.len(), grads.len())));
    }
    if !(cfg.lr > 0.0) {
        return Err(Error::InvalidParameter(format!("learning rate must be positive, got {}", cfg.lr)));
    }
    if state.m.len() != params.len() {
        *state = AdamState::new(params.len());
    }
    state.t += 1;
    let c1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let c2 = 1.0 - cfg.beta2.powi(state.t as i32);
    for i in 0..params.len() {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

/// Descent rule used by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Optimizer {
    Adam(AdamConfig),
    Sgd { lr: f64 },
}

impl Optimizer {
    pub fn step(&self, params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<()> {
        match self {
            Optimizer::Adam(cfg) => adam_step(params, grads, state, cfg),
            Optimizer::Sgd { lr } => {
                if params.len() != grads.len() {
                    return Err(Error::ShapeMismatch(format!("{} params, {} grads", params.len(), grads.len())));
                }
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= lr * g;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let mut p = vec![1.0, -2.0];
        let mut state = AdamState { m: vec![0.5, -0.5], v: vec![0.1, 0.1], t: 3 };
        adam_step(&mut p, &[0.0, 0.0], &mut state, &AdamConfig::default()).unwrap();
        assert!((state.m[0] - 0.45).abs() < 1e-15);
        assert!((state.v[0] - 0.0999).abs() < 1e-15);
        // the decayed first moment still moves the parameters; a fresh state does not
        let mut p2 = vec![1.0, -2.0];
        let mut fresh = AdamState::new(2);
        adam_step(&mut p2, &[0.0, 0.0], &mut fresh, &AdamConfig::default()).unwrap();
        assert_eq!(p2, vec![1.0, -2.0]);
        assert!(p[0] < 1.0);
    }

    #[test]
    fn constant_gradient_steps_approach_lr() {
        let cfg = AdamConfig::default();
        let mut p = vec![0.0, 0.0];
        let mut state = AdamState::new(2);
        let mut prev = p.clone();
        for _ in 0..500 {
            adam_step(&mut p, &[3.0, -0.001], &mut state, &cfg).unwrap();
            for i in 0..2 {
                let step = p[i] - prev[i];
                assert!(step.abs() <= cfg.lr * (1.0 + 1e-6));
            }
            prev = p.clone();
        }
        let mut q = p.clone();
        adam_step(&mut q, &[3.0, -0.001], &mut state, &cfg).unwrap();
        assert!(((q[0] - p[0]) + cfg.lr).abs() < 1e-6);
        assert!(((q[1] - p[1]) - cfg.lr).abs() < 1e-4);
    }

    #[test]
    fn deterministic_and_checked() {
        let run = || {
            let mut p = vec![0.3, 0.1, -0.7];
            let mut s = AdamState::new(3);
            for k in 0..10 {
                adam_step(&mut p, &[k as f64, -1.0, 0.5], &mut s, &AdamConfig::default()).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
        let mut p = vec![0.0];
        assert!(adam_step(&mut p, &[1.0, 2.0], &mut AdamState::new(1), &AdamConfig::default()).is_err());
        assert!(adam_step(&mut p, &[1.0], &mut AdamState::new(1), &AdamConfig::with_lr(0.0)).is_err());
    }
}
