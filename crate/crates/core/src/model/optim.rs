use alloc::format;
use alloc::vec::Vec;

use super::{ModelError, Parameters};
use crate::tensor::Real;

/// AdamW with decoupled weight decay applied to every parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamW {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.99, eps: 1e-8, weight_decay: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<F> {
    pub m: Vec<Vec<F>>,
    pub v: Vec<Vec<F>>,
    /// Completed steps.
    pub t: u64,
}

impl<F: Real> OptimizerState<F> {
    pub fn new(params: &Parameters<F>) -> Self {
        let zeros: Vec<Vec<F>> = params.tensors.iter().map(|t| alloc::vec![F::ZERO; t.numel()]).collect();
        Self { m: zeros.clone(), v: zeros, t: 0 }
    }
}

impl AdamW {
    /// One update: `θ ← θ − lr·λ·θ`, then the bias-corrected adaptive step.
    pub fn step<F: Real>(
        &self,
        params: &mut Parameters<F>,
        grads: &[Vec<F>],
        state: &mut OptimizerState<F>,
        lr: f64,
    ) -> Result<(), ModelError> {
        let n = params.tensors.len();
        if grads.len() != n || state.m.len() != n || state.v.len() != n {
            return Err(ModelError::InvalidConfig(format!(
                "{} gradients and {} moments for {n} parameters",
                grads.len(),
                state.m.len()
            )));
        }
        state.t += 1;
        let t = state.t as f64;
        let c1 = 1.0 / (1.0 - libm::pow(self.beta1, t));
        let c2 = 1.0 / (1.0 - libm::pow(self.beta2, t));
        let (b1, b2) = (F::from_f64(self.beta1), F::from_f64(self.beta2));
        let (ob1, ob2) = (F::from_f64(1.0 - self.beta1), F::from_f64(1.0 - self.beta2));
        let (c1, c2) = (F::from_f64(c1), F::from_f64(c2));
        let decay = F::from_f64(lr * self.weight_decay);
        let (lr, eps) = (F::from_f64(lr), F::from_f64(self.eps));
        for (i, tensor) in params.tensors.iter_mut().enumerate() {
            let (g, m, v) = (&grads[i], &mut state.m[i], &mut state.v[i]);
            if g.len() != tensor.numel() {
                return Err(ModelError::InvalidConfig(format!("gradient {i} has {} values", g.len())));
            }
            for (j, theta) in tensor.data_mut().iter_mut().enumerate() {
                *theta -= decay * *theta;
                m[j] = b1 * m[j] + ob1 * g[j];
                v[j] = b2 * v[j] + ob2 * g[j] * g[j];
                let m_hat = m[j] * c1;
                let v_hat = v[j] * c2;
                *theta -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Cosine decay from `lr_max` at `t = 0` to `lr_min` at `t = horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub lr_max: f64,
    pub lr_min: f64,
    pub horizon: u64,
}

impl LrSchedule {
    pub fn new(horizon: u64) -> Self {
        Self { lr_max: 1e-3, lr_min: 1e-4, horizon }
    }

    pub fn at(&self, t: u64) -> f64 {
        cosine_lr(t, self)
    }
}

/// Steps past the horizon stay at `lr_min`.
pub fn cosine_lr(t: u64, schedule: &LrSchedule) -> f64 {
    let LrSchedule { lr_max, lr_min, horizon } = *schedule;
    if horizon == 0 || t >= horizon {
        return lr_min;
    }
    if t == 0 {
        return lr_max;
    }
    let phase = core::f64::consts::PI * t as f64 / horizon as f64;
    lr_min + 0.5 * (lr_max - lr_min) * (1.0 + libm::cos(phase))
}
