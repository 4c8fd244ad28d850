//! AdamW with decoupled weight decay.

use std::collections::BTreeMap;

use super::NumError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

/// Per-parameter moments plus the shared step count.
#[derive(Clone, Debug)]
pub struct OptimizerState {
    pub config: AdamWConfig,
    step: u64,
    moments: BTreeMap<String, Moments>,
}

impl OptimizerState {
    pub fn new(config: AdamWConfig) -> Self {
        Self {
            config,
            step: 0,
            moments: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update to every `(name, param, grad)` triple.
    ///
    /// `θ ← θ − lr·wd·θ`, then `θ ← θ − lr·m̂ / (√v̂ + eps)` with bias-corrected
    /// moments.
    pub fn step<'a, I>(&mut self, params: I) -> Result<(), NumError>
    where
        I: IntoIterator<Item = (&'a str, &'a mut [f64], &'a [f64])>,
    {
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        for (name, theta, grad) in params {
            if theta.len() != grad.len() {
                return Err(NumError::GradientShape {
                    name: name.to_string(),
                    param: theta.len(),
                    grad: grad.len(),
                });
            }
            let mom = self.moments.entry(name.to_string()).or_insert_with(|| Moments {
                m: vec![0.0; theta.len()],
                v: vec![0.0; theta.len()],
            });
            if mom.m.len() != theta.len() {
                return Err(NumError::GradientShape {
                    name: name.to_string(),
                    param: theta.len(),
                    grad: mom.m.len(),
                });
            }
            for i in 0..theta.len() {
                let g = grad[i];
                mom.m[i] = c.beta1 * mom.m[i] + (1.0 - c.beta1) * g;
                mom.v[i] = c.beta2 * mom.v[i] + (1.0 - c.beta2) * g * g;
                let m_hat = mom.m[i] / bc1;
                let v_hat = mom.v[i] / bc2;
                theta[i] -= c.lr * c.weight_decay * theta[i];
                theta[i] -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
            }
        }
        Ok(())
    }
}

/// One AdamW update of a single parameter vector.
pub fn adamw_step(
    state: &mut OptimizerState,
    name: &str,
    params: &mut [f64],
    grads: &[f64],
) -> Result<(), NumError> {
    state.step(std::iter::once((name, params, grads)))
}
