//! Soft actor-critic over the binary element-selection mask.
//!
//! The actor outputs a Gaussian per element. A sample is squashed with
//! `tanh` and thresholded: positive means ON, anything else (including an
//! exact zero) means OFF. Critics see the mask encoded as ±1.

use std::f64::consts::LN_10;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::common::{critic_regression, layer_dims, make_optimizer, sgd, twin_min};
use super::replay::Batch;
use crate::error::{ensure, Result};
use crate::nn::{
    backprop_sample, sample_reparameterized, soft_update, GaussianHead, Matrix, Mlp, Optimizer, OptimizerKind,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SacConfig {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub tau: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    /// Entropy temperature λ.
    pub temperature: f64,
    /// Measure the entropy bonus with base-10 logarithms.
    pub log10_entropy: bool,
    pub tanh_correction: bool,
    pub optimizer: OptimizerKind,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256, 256],
            gamma: 0.99,
            tau: 0.005,
            lr_actor: 3e-4,
            lr_critic: 3e-4,
            temperature: 0.2,
            log10_entropy: true,
            tanh_correction: true,
            optimizer: OptimizerKind::Adam,
        }
    }
}

/// Gradients of both SAC losses at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct SacGrads {
    pub actor: Vec<f64>,
    pub critic1: Vec<f64>,
    pub critic2: Vec<f64>,
    pub actor_loss: f64,
    pub critic_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SacLosses {
    pub actor: f64,
    /// Mean of the two critic losses.
    pub critic: f64,
}

/// Threshold rule: strictly positive → ON.
pub fn threshold_mask(squashed: &[f64]) -> Vec<bool> {
    squashed.iter().map(|&a| a > 0.0).collect()
}

#[derive(Debug, Clone)]
pub struct SacAgent {
    pub cfg: SacConfig,
    pub state_dim: usize,
    pub mask_dim: usize,
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub target1: Mlp,
    pub target2: Mlp,
    pub opt_actor: Optimizer,
    pub opt_critic1: Optimizer,
    pub opt_critic2: Optimizer,
}

impl SacAgent {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, mask_dim: usize, cfg: SacConfig, rng: &mut R) -> Result<Self> {
        ensure!(mask_dim > 0, InvalidArgument, "mask dimension must be positive");
        let actor = Mlp::new(&layer_dims(state_dim, &cfg.hidden, 2 * mask_dim), rng)?;
        let cdims = layer_dims(state_dim + mask_dim, &cfg.hidden, 1);
        let critic1 = Mlp::new(&cdims, rng)?;
        let critic2 = Mlp::new(&cdims, rng)?;
        Ok(Self {
            opt_actor: make_optimizer(cfg.optimizer, cfg.lr_actor, &actor),
            opt_critic1: make_optimizer(cfg.optimizer, cfg.lr_critic, &critic1),
            opt_critic2: make_optimizer(cfg.optimizer, cfg.lr_critic, &critic2),
            target1: critic1.clone(),
            target2: critic2.clone(),
            actor,
            critic1,
            critic2,
            state_dim,
            mask_dim,
            cfg,
        })
    }

    /// Coefficient on `ln π` in the losses.
    pub fn entropy_coef(&self) -> f64 {
        if self.cfg.log10_entropy {
            self.cfg.temperature / LN_10
        } else {
            self.cfg.temperature
        }
    }

    pub fn head(&self, states: &Matrix) -> Result<GaussianHead> {
        Ok(GaussianHead::from_actor_output(&self.actor.forward(states)?))
    }

    /// Picks a mask for one state. Returns the mask and the squashed sample
    /// it was thresholded from.
    pub fn select<R: Rng + ?Sized>(&self, state: &[f64], explore: bool, rng: &mut R) -> Result<(Vec<bool>, Vec<f64>)> {
        let head = self.head(&Matrix::row_vector(state))?;
        let squashed = if explore {
            sample_reparameterized(&head, self.cfg.tanh_correction, rng).action.into_vec()
        } else {
            head.mean.as_slice().iter().map(|m| m.tanh()).collect()
        };
        Ok((threshold_mask(&squashed), squashed))
    }

    /// `y = r + γ(1 − done)[min_i q̄_i(s', a') − λ log π(a'|s')]` with `a'`
    /// drawn fresh from the current actor and thresholded.
    pub fn critic_targets<R: Rng + ?Sized>(&self, batch: &Batch, rng: &mut R) -> Result<Vec<f64>> {
        let head = self.head(&batch.next_states)?;
        let sample = sample_reparameterized(&head, self.cfg.tanh_correction, rng);
        let mut bits = sample.action.clone();
        bits.map_inplace(|a| if a > 0.0 { 1.0 } else { -1.0 });
        let input = batch.next_states.hcat(&bits)?;
        let q = twin_min(&self.target1.forward(&input)?, &self.target2.forward(&input)?);
        let coef = self.entropy_coef();
        Ok((0..batch.len())
            .map(|i| {
                let soft = q[i] - coef * sample.log_prob[i];
                batch.rewards[i] + self.cfg.gamma * (1.0 - batch.terminals[i]) * soft
            })
            .collect())
    }

    pub fn critic_grads(&self, batch: &Batch, targets: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let input = batch.states.hcat(&batch.masks)?;
        let (l1, g1) = critic_regression(&self.critic1, &input, targets)?;
        let (l2, g2) = critic_regression(&self.critic2, &input, targets)?;
        Ok((0.5 * (l1 + l2), g1, g2))
    }

    /// Gradient of `mean[λ log π(ã|s) − min_i q_i(s, ã)]` with respect to the
    /// actor, where `ã` is a fresh squashed reparameterised sample.
    pub fn actor_grads<R: Rng + ?Sized>(&self, batch: &Batch, rng: &mut R) -> Result<(f64, Vec<f64>)> {
        let b = batch.len();
        let (out, tape) = self.actor.forward_tape(&batch.states)?;
        let head = GaussianHead::from_actor_output(&out);
        let sample = sample_reparameterized(&head, self.cfg.tanh_correction, rng);
        let input = batch.states.hcat(&sample.action)?;
        let (q1, t1) = self.critic1.forward_tape(&input)?;
        let (q2, t2) = self.critic2.forward_tape(&input)?;
        let coef = self.entropy_coef();
        let inv_b = 1.0 / b as f64;
        let mut g1 = Matrix::zeros(b, 1);
        let mut g2 = Matrix::zeros(b, 1);
        let mut loss = 0.0;
        for i in 0..b {
            let (a, c) = (q1.get(i, 0), q2.get(i, 0));
            loss += (coef * sample.log_prob[i] - a.min(c)) * inv_b;
            if a <= c {
                g1.set(i, 0, -inv_b);
            } else {
                g2.set(i, 0, -inv_b);
            }
        }
        let (_, gin1) = self.critic1.backward(&t1, &g1)?;
        let (_, gin2) = self.critic2.backward(&t2, &g2)?;
        let s = self.state_dim;
        let mut d_action = Matrix::zeros(b, self.mask_dim);
        for i in 0..b {
            for j in 0..self.mask_dim {
                d_action.set(i, j, gin1.get(i, s + j) + gin2.get(i, s + j));
            }
        }
        let d_logp = vec![coef * inv_b; b];
        let d_out = backprop_sample(&head, &sample, &d_action, &d_logp);
        let (grads, _) = self.actor.backward(&tape, &d_out)?;
        Ok((loss, grads))
    }

    /// Both gradients at the current parameters, without touching them.
    pub fn gradients<R: Rng + ?Sized>(&self, batch: &Batch, rng: &mut R) -> Result<SacGrads> {
        let y = self.critic_targets(batch, rng)?;
        let (critic_loss, critic1, critic2) = self.critic_grads(batch, &y)?;
        let (actor_loss, actor) = self.actor_grads(batch, rng)?;
        Ok(SacGrads { actor, critic1, critic2, actor_loss, critic_loss })
    }

    /// One training step: critics, then the actor against the refreshed
    /// critics, then the soft target update.
    pub fn update<R: Rng + ?Sized>(&mut self, batch: &Batch, rng: &mut R) -> Result<SacLosses> {
        let y = self.critic_targets(batch, rng)?;
        let (critic_loss, g1, g2) = self.critic_grads(batch, &y)?;
        self.opt_critic1.step(self.critic1.params_mut(), &g1)?;
        self.opt_critic2.step(self.critic2.params_mut(), &g2)?;
        let (actor_loss, ga) = self.actor_grads(batch, rng)?;
        self.opt_actor.step(self.actor.params_mut(), &ga)?;
        self.soft_update_targets()?;
        Ok(SacLosses { actor: actor_loss, critic: critic_loss })
    }

    /// Polyak step of the target critics; a rate of zero leaves them alone.
    pub fn soft_update_targets(&mut self) -> Result<()> {
        if self.cfg.tau > 0.0 {
            soft_update(self.target1.params_mut(), self.critic1.params(), self.cfg.tau)?;
            soft_update(self.target2.params_mut(), self.critic2.params(), self.cfg.tau)?;
        }
        Ok(())
    }

    pub fn sync_targets(&mut self) {
        self.target1.clone_from(&self.critic1);
        self.target2.clone_from(&self.critic2);
    }

    /// Plain gradient step on the online networks.
    pub fn sgd_step(&mut self, g: &SacGrads, lr: f64) {
        sgd(self.actor.params_mut(), &g.actor, lr);
        sgd(self.critic1.params_mut(), &g.critic1, lr);
        sgd(self.critic2.params_mut(), &g.critic2, lr);
    }

    /// Step of the agent's own optimisers with externally computed gradients.
    pub fn optimizer_step(&mut self, g: &SacGrads) -> Result<()> {
        self.opt_actor.step(self.actor.params_mut(), &g.actor)?;
        self.opt_critic1.step(self.critic1.params_mut(), &g.critic1)?;
        self.opt_critic2.step(self.critic2.params_mut(), &g.critic2)?;
        Ok(())
    }

    /// Copies online weights from another agent of the same shape.
    pub fn copy_online_from(&mut self, other: &SacAgent) -> Result<()> {
        self.actor.copy_from(&other.actor)?;
        self.critic1.copy_from(&other.critic1)?;
        self.critic2.copy_from(&other.critic2)
    }

    /// Replaces the optimisers with fresh state.
    pub fn reset_optimizers(&mut self) {
        self.opt_actor = make_optimizer(self.cfg.optimizer, self.cfg.lr_actor, &self.actor);
        self.opt_critic1 = make_optimizer(self.cfg.optimizer, self.cfg.lr_critic, &self.critic1);
        self.opt_critic2 = make_optimizer(self.cfg.optimizer, self.cfg.lr_critic, &self.critic2);
    }
}
