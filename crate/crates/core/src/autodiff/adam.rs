use indexmap::IndexMap;
use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use super::{AutodiffError, Gradients, Parameters};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    /// ℓ2 coefficient added to the gradient before the moment updates.
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    m: IndexMap<String, Array2<f64>>,
    v: IndexMap<String, Array2<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: IndexMap::new(),
            v: IndexMap::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One update of every parameter. Nothing changes if any gradient is non-finite.
    pub fn step(
        &mut self,
        params: &mut Parameters,
        grads: &Gradients,
    ) -> Result<(), AutodiffError> {
        for (name, g) in grads {
            let p = params.get(name)?;
            if p.dim() != g.dim() {
                return Err(AutodiffError::ShapeMismatch {
                    op: "adam",
                    left: p.dim(),
                    right: g.dim(),
                });
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(AutodiffError::NonFiniteGradient(name.clone()));
            }
        }
        self.step += 1;
        let c = self.config;
        let bias1 = 1.0 - c.beta1.powi(self.step as i32);
        let bias2 = 1.0 - c.beta2.powi(self.step as i32);
        for (name, p) in params.iter_mut() {
            let zeros;
            let g = match grads.get(name) {
                Some(g) => g,
                None => {
                    zeros = Array2::zeros(p.dim());
                    &zeros
                }
            };
            let m = self
                .m
                .entry(name.to_string())
                .or_insert_with(|| Array2::zeros(p.dim()));
            let v = self
                .v
                .entry(name.to_string())
                .or_insert_with(|| Array2::zeros(p.dim()));
            Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                let g = g + c.weight_decay * *p;
                *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *p -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
            });
        }
        Ok(())
    }
}
