use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First-order optimiser state for one flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, num_params: usize) -> Self {
        let moments = if kind == OptimizerKind::Adam { num_params } else { 0 };
        Self { kind, lr, m: vec![0.0; moments], v: vec![0.0; moments], t: 0 }
    }

    pub fn adam(lr: f64, num_params: usize) -> Self {
        Self::new(OptimizerKind::Adam, lr, num_params)
    }

    pub fn sgd(lr: f64) -> Self {
        Self::new(OptimizerKind::Sgd, lr, 0)
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Applies one descent step `params -= update(grads)`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        ensure!(
            params.len() == grads.len(),
            DimensionMismatch,
            "{} parameters but {} gradients",
            params.len(),
            grads.len()
        );
        self.t += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                params.iter_mut().zip(grads).for_each(|(p, g)| *p -= self.lr * g);
            }
            OptimizerKind::Adam => {
                ensure!(
                    self.m.len() == params.len(),
                    DimensionMismatch,
                    "optimizer tracks {} parameters, got {}",
                    self.m.len(),
                    params.len()
                );
                let bc1 = 1.0 - ADAM_BETA1.powf(self.t as f64);
                let bc2 = 1.0 - ADAM_BETA2.powf(self.t as f64);
                for (((p, g), m), v) in params.iter_mut().zip(grads).zip(self.m.iter_mut()).zip(self.v.iter_mut()) {
                    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *p -= self.lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
        }
        Ok(())
    }
}

/// Polyak averaging `target ← τ·online + (1−τ)·target`.
pub fn soft_update(target: &mut [f64], online: &[f64], tau: f64) -> Result<()> {
    ensure!(tau > 0.0 && tau <= 1.0, InvalidArgument, "soft-update rate must lie in (0, 1], got {tau}");
    ensure!(
        target.len() == online.len(),
        DimensionMismatch,
        "target has {} parameters, online has {}",
        target.len(),
        online.len()
    );
    target.iter_mut().zip(online).for_each(|(t, o)| *t = tau * o + (1.0 - tau) * *t);
    Ok(())
}
