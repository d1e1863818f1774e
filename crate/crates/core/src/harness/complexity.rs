//! Abstract operation counts of meta-training and meta-adaptation.

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::env::{state_dim, ActionLayout};
use crate::nn::weight_count;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityInputs {
    /// `Σ_l h_l h_{l+1}` of the networks being trained.
    pub weights: u128,
    /// Mini-batch size `|M^trn|`.
    pub batch: u128,
    pub e_trn: u128,
    pub e_adp: u128,
    /// Slots per episode `L`.
    pub horizon: u128,
    /// Number of tasks `T`.
    pub tasks: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    pub meta_training_cost: u128,
    pub meta_adaptation_cost: u128,
}

/// `weights · batch · E_trn · L · T` and `weights · batch · E_adp · L`.
pub fn complexity_estimate(c: &ComplexityInputs) -> ComplexityEstimate {
    let per_episode = c.weights * c.batch * c.horizon;
    ComplexityEstimate {
        meta_training_cost: per_episode * c.e_trn * c.tasks,
        meta_adaptation_cost: per_episode * c.e_adp,
    }
}

impl ComplexityInputs {
    /// Counts the weights of the six online networks (SAC actor and twin
    /// critics, TD3 actor and twin critics) for the configured sizes.
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let s = state_dim(&cfg.env);
        let m = cfg.env.num_elements();
        let d = ActionLayout::for_config(&cfg.env).dim();
        let dims = |i: usize, hidden: &[usize], o: usize| {
            let mut v = vec![i];
            v.extend_from_slice(hidden);
            v.push(o);
            weight_count(&v) as u128
        };
        let sh = &cfg.agent.sac.hidden;
        let th = &cfg.agent.td3.hidden;
        let weights = dims(s, sh, 2 * m) + 2 * dims(s + m, sh, 1) + dims(s, th, d) + 2 * dims(s + d, th, 1);
        Self {
            weights,
            batch: cfg.agent.batch_size as u128,
            e_trn: cfg.meta.e_trn as u128,
            e_adp: cfg.meta.e_adp as u128,
            horizon: cfg.env.horizon as u128,
            tasks: cfg.meta.tasks as u128,
        }
    }
}
