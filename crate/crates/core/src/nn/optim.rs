use serde::{Deserialize, Serialize};

use super::network::GradientRecord;
use super::params::ParameterStore;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    #[serde(flatten)]
    pub kind: OptimizerKind,
    pub learning_rate: f64,
}

impl OptimizerSpec {
    pub fn sgd(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::Sgd,
            learning_rate,
        }
    }

    pub fn adam(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::adam(),
            learning_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Optimizer with its per-parameter state.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    spec: OptimizerSpec,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl OptimizerState {
    pub fn new(spec: OptimizerSpec, n: usize) -> Self {
        let (m, v) = match spec.kind {
            OptimizerKind::Sgd => (Vec::new(), Vec::new()),
            OptimizerKind::Adam { .. } => (vec![0.0; n], vec![0.0; n]),
        };
        Self { spec, m, v, step: 0 }
    }

    pub fn spec(&self) -> &OptimizerSpec {
        &self.spec
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update to every parameter.
    pub fn step(&mut self, params: &mut ParameterStore, grads: &GradientRecord) -> Result<()> {
        self.step_on(params, grads, None)
    }

    /// Applies one update, touching only `indices` when given. The update is
    /// computed in full before any parameter is written, so a non-finite
    /// result leaves `params` untouched.
    pub fn step_on(
        &mut self,
        params: &mut ParameterStore,
        grads: &GradientRecord,
        indices: Option<&[usize]>,
    ) -> Result<()> {
        let n = params.len();
        if grads.len() != n {
            return Err(Error::Shape(format!(
                "{} gradients for {n} parameters",
                grads.len()
            )));
        }
        if !self.m.is_empty() && self.m.len() != n {
            return Err(Error::Shape(format!(
                "optimizer state sized for {} parameters, got {n}",
                self.m.len()
            )));
        }
        let all: Vec<usize>;
        let idx = match indices {
            Some(i) => i,
            None => {
                all = (0..n).collect();
                &all
            }
        };
        let lr = self.spec.learning_rate;
        let g = &grads.grads;
        let values = params.values();
        let mut updates = Vec::with_capacity(idx.len());
        match self.spec.kind {
            OptimizerKind::Sgd => {
                for &i in idx {
                    updates.push(values[i] - lr * g[i]);
                }
                check_finite(&updates, idx)?;
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let t = (self.step + 1) as i32;
                let bc1 = 1.0 - beta1.powi(t);
                let bc2 = 1.0 - beta2.powi(t);
                let mut moments = Vec::with_capacity(idx.len());
                for &i in idx {
                    let m = beta1 * self.m[i] + (1.0 - beta1) * g[i];
                    let v = beta2 * self.v[i] + (1.0 - beta2) * g[i] * g[i];
                    let m_hat = m / bc1;
                    let v_hat = v / bc2;
                    updates.push(values[i] - lr * m_hat / (v_hat.sqrt() + eps));
                    moments.push((m, v));
                }
                check_finite(&updates, idx)?;
                for (&i, (m, v)) in idx.iter().zip(moments) {
                    self.m[i] = m;
                    self.v[i] = v;
                }
            }
        }
        let values = params.values_mut();
        for (&i, u) in idx.iter().zip(updates) {
            values[i] = u;
        }
        self.step += 1;
        Ok(())
    }
}

fn check_finite(updates: &[f64], idx: &[usize]) -> Result<()> {
    match updates.iter().position(|u| !u.is_finite()) {
        Some(p) => Err(Error::Numeric(format!(
            "non-finite update for parameter {}",
            idx[p]
        ))),
        None => Ok(()),
    }
}
