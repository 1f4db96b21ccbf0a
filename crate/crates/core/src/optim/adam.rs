use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adam hyperparameters with an exponentially decaying learning rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub initial_lr: f64,
    pub decay_steps: f64,
    pub decay_rate: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_eps() -> f64 {
    1e-8
}

impl AdamConfig {
    pub fn new(initial_lr: f64, decay_steps: f64, decay_rate: f64) -> Self {
        Self {
            initial_lr,
            decay_steps,
            decay_rate,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }

    /// Learning rate used for the update taken at `step` (zero-based).
    ///
    /// The exponent is the real ratio `step / decay_steps`, so the rate decays
    /// smoothly rather than in stairs.
    pub fn lr(&self, step: u64) -> f64 {
        self.initial_lr * self.decay_rate.powf(step as f64 / self.decay_steps)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.initial_lr > 0.0
            && self.initial_lr.is_finite()
            && self.decay_steps > 0.0
            && self.decay_rate > 0.0
            && self.decay_rate <= 1.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid Adam settings: {self:?}")))
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdamState {
    config: AdamConfig,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(config: AdamConfig, len: usize) -> Self {
        Self {
            config,
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// Number of updates applied so far.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// Learning rate the next update will use.
    pub fn current_lr(&self) -> f64 {
        self.config.lr(self.step)
    }

    /// Applies one bias-corrected Adam update in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::config(format!(
                "Adam state holds {} entries, got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grad.len()
            )));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged {
                step: self.step as usize,
            });
        }
        let AdamConfig { beta1, beta2, eps, .. } = self.config;
        let lr = self.current_lr();
        let t = (self.step + 1) as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        self.step += 1;
        Ok(())
    }
}
