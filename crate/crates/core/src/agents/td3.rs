//! Twin-delayed deterministic policy gradient over the continuous action.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::common::{critic_regression, layer_dims, make_optimizer, sgd, twin_min};
use super::replay::Batch;
use crate::error::{ensure, Result};
use crate::nn::{soft_update, Matrix, Mlp, Optimizer, OptimizerKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Td3Config {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub tau_critic: f64,
    pub tau_actor: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    /// Target smoothing noise standard deviation σ.
    pub policy_noise: f64,
    /// Smoothing noise clip `c`.
    pub noise_clip: f64,
    /// Exploration noise standard deviation.
    pub explore_std: f64,
    /// Actor and targets update every `policy_delay` calls.
    pub policy_delay: u64,
    pub action_low: f64,
    pub action_high: f64,
    /// Minimise `+q` in the actor loss instead of `−q`.
    pub literal_actor_sign: bool,
    pub optimizer: OptimizerKind,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            hidden: vec![256, 256],
            gamma: 0.99,
            tau_critic: 0.005,
            tau_actor: 0.005,
            lr_actor: 3e-4,
            lr_critic: 3e-4,
            policy_noise: 0.2,
            noise_clip: 0.5,
            explore_std: 0.1,
            policy_delay: 2,
            action_low: -1.0,
            action_high: 1.0,
            literal_actor_sign: false,
            optimizer: OptimizerKind::Adam,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Td3Grads {
    pub actor: Vec<f64>,
    pub critic1: Vec<f64>,
    pub critic2: Vec<f64>,
    pub actor_loss: f64,
    pub critic_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Td3Report {
    pub critic: f64,
    /// Present when this call also updated the actor.
    pub actor: Option<f64>,
}

/// `clip(μ̄ + clip(ε, −c, c), lo, hi)`.
pub fn smooth_target_action(mu: f64, eps: f64, c: f64, lo: f64, hi: f64) -> f64 {
    (mu + eps.clamp(-c, c)).clamp(lo, hi)
}

#[derive(Debug, Clone)]
pub struct Td3Agent {
    pub cfg: Td3Config,
    pub state_dim: usize,
    pub action_dim: usize,
    /// Pre-activation network; the policy is `tanh(actor(s))`.
    pub actor: Mlp,
    pub target_actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub target1: Mlp,
    pub target2: Mlp,
    pub opt_actor: Optimizer,
    pub opt_critic1: Optimizer,
    pub opt_critic2: Optimizer,
    pub updates: u64,
    pub actor_updates: u64,
}

fn tanh_rows(m: &Matrix) -> Matrix {
    let mut t = m.clone();
    t.map_inplace(f64::tanh);
    t
}

impl Td3Agent {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, action_dim: usize, cfg: Td3Config, rng: &mut R) -> Result<Self> {
        ensure!(cfg.policy_delay >= 1, InvalidArgument, "policy delay must be at least 1");
        ensure!(
            cfg.action_low < cfg.action_high,
            InvalidArgument,
            "action bounds [{}, {}] are empty",
            cfg.action_low,
            cfg.action_high
        );
        let actor = Mlp::new(&layer_dims(state_dim, &cfg.hidden, action_dim), rng)?;
        let cdims = layer_dims(state_dim + action_dim, &cfg.hidden, 1);
        let critic1 = Mlp::new(&cdims, rng)?;
        let critic2 = Mlp::new(&cdims, rng)?;
        Ok(Self {
            opt_actor: make_optimizer(cfg.optimizer, cfg.lr_actor, &actor),
            opt_critic1: make_optimizer(cfg.optimizer, cfg.lr_critic, &critic1),
            opt_critic2: make_optimizer(cfg.optimizer, cfg.lr_critic, &critic2),
            target_actor: actor.clone(),
            target1: critic1.clone(),
            target2: critic2.clone(),
            actor,
            critic1,
            critic2,
            state_dim,
            action_dim,
            updates: 0,
            actor_updates: 0,
            cfg,
        })
    }

    /// Deterministic policy output, optionally with clipped Gaussian
    /// exploration noise.
    pub fn act<R: Rng + ?Sized>(&self, state: &[f64], explore: bool, rng: &mut R) -> Result<Vec<f64>> {
        let mut a: Vec<f64> = self.actor.forward_one(state)?.into_iter().map(f64::tanh).collect();
        if explore && self.cfg.explore_std > 0.0 {
            let n = Normal::new(0.0, self.cfg.explore_std).expect("positive std");
            for x in &mut a {
                *x = (*x + n.sample(rng)).clamp(self.cfg.action_low, self.cfg.action_high);
            }
        }
        Ok(a)
    }

    /// Smoothed target actions for a batch of next states.
    pub fn target_actions<R: Rng + ?Sized>(&self, next_states: &Matrix, rng: &mut R) -> Result<Matrix> {
        let mut a = tanh_rows(&self.target_actor.forward(next_states)?);
        let c = &self.cfg;
        let noise = (c.policy_noise > 0.0).then(|| Normal::new(0.0, c.policy_noise).expect("positive std"));
        a.map_inplace(|mu| {
            let eps = noise.as_ref().map_or(0.0, |n| n.sample(&mut *rng));
            smooth_target_action(mu, eps, c.noise_clip, c.action_low, c.action_high)
        });
        Ok(a)
    }

    /// `y = r + γ(1 − done) min_i q̄_i(s', ã')`.
    pub fn critic_targets<R: Rng + ?Sized>(&self, batch: &Batch, rng: &mut R) -> Result<Vec<f64>> {
        let a = self.target_actions(&batch.next_states, rng)?;
        let input = batch.next_states.hcat(&a)?;
        let q = twin_min(&self.target1.forward(&input)?, &self.target2.forward(&input)?);
        Ok((0..batch.len()).map(|i| batch.rewards[i] + self.cfg.gamma * (1.0 - batch.terminals[i]) * q[i]).collect())
    }

    pub fn critic_grads(&self, batch: &Batch, targets: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let input = batch.states.hcat(&batch.conts)?;
        let (l1, g1) = critic_regression(&self.critic1, &input, targets)?;
        let (l2, g2) = critic_regression(&self.critic2, &input, targets)?;
        Ok((0.5 * (l1 + l2), g1, g2))
    }

    /// Gradient of `−mean q_1(s, μ(s))` (or `+mean` in literal mode).
    pub fn actor_grads(&self, batch: &Batch) -> Result<(f64, Vec<f64>)> {
        let b = batch.len();
        let (out, tape) = self.actor.forward_tape(&batch.states)?;
        let a = tanh_rows(&out);
        let (q, tq) = self.critic1.forward_tape(&batch.states.hcat(&a)?)?;
        let sign = if self.cfg.literal_actor_sign { 1.0 } else { -1.0 };
        let inv_b = 1.0 / b as f64;
        let loss = sign * q.as_slice().iter().sum::<f64>() * inv_b;
        let g = Matrix::from_vec(b, 1, vec![sign * inv_b; b])?;
        let (_, gin) = self.critic1.backward(&tq, &g)?;
        let mut d_out = Matrix::zeros(b, self.action_dim);
        for i in 0..b {
            for j in 0..self.action_dim {
                let t = a.get(i, j);
                d_out.set(i, j, gin.get(i, self.state_dim + j) * (1.0 - t * t));
            }
        }
        let (grads, _) = self.actor.backward(&tape, &d_out)?;
        Ok((loss, grads))
    }

    pub fn gradients<R: Rng + ?Sized>(&self, batch: &Batch, rng: &mut R) -> Result<Td3Grads> {
        let y = self.critic_targets(batch, rng)?;
        let (critic_loss, critic1, critic2) = self.critic_grads(batch, &y)?;
        let (actor_loss, actor) = self.actor_grads(batch)?;
        Ok(Td3Grads { actor, critic1, critic2, actor_loss, critic_loss })
    }

    /// Critic step every call; actor and all targets every
    /// `policy_delay`-th call.
    pub fn update<R: Rng + ?Sized>(&mut self, batch: &Batch, rng: &mut R) -> Result<Td3Report> {
        self.updates += 1;
        let y = self.critic_targets(batch, rng)?;
        let (critic, g1, g2) = self.critic_grads(batch, &y)?;
        self.opt_critic1.step(self.critic1.params_mut(), &g1)?;
        self.opt_critic2.step(self.critic2.params_mut(), &g2)?;
        let actor = if self.updates.is_multiple_of(self.cfg.policy_delay) {
            let (loss, ga) = self.actor_grads(batch)?;
            self.opt_actor.step(self.actor.params_mut(), &ga)?;
            self.actor_updates += 1;
            self.soft_update_targets()?;
            Some(loss)
        } else {
            None
        };
        Ok(Td3Report { critic, actor })
    }

    pub fn soft_update_targets(&mut self) -> Result<()> {
        if self.cfg.tau_critic > 0.0 {
            soft_update(self.target1.params_mut(), self.critic1.params(), self.cfg.tau_critic)?;
            soft_update(self.target2.params_mut(), self.critic2.params(), self.cfg.tau_critic)?;
        }
        if self.cfg.tau_actor > 0.0 {
            soft_update(self.target_actor.params_mut(), self.actor.params(), self.cfg.tau_actor)?;
        }
        Ok(())
    }

    pub fn sync_targets(&mut self) {
        self.target_actor.clone_from(&self.actor);
        self.target1.clone_from(&self.critic1);
        self.target2.clone_from(&self.critic2);
    }

    pub fn sgd_step(&mut self, g: &Td3Grads, lr: f64) {
        sgd(self.actor.params_mut(), &g.actor, lr);
        sgd(self.critic1.params_mut(), &g.critic1, lr);
        sgd(self.critic2.params_mut(), &g.critic2, lr);
    }

    pub fn optimizer_step(&mut self, g: &Td3Grads) -> Result<()> {
        self.opt_actor.step(self.actor.params_mut(), &g.actor)?;
        self.opt_critic1.step(self.critic1.params_mut(), &g.critic1)?;
        self.opt_critic2.step(self.critic2.params_mut(), &g.critic2)?;
        Ok(())
    }

    pub fn copy_online_from(&mut self, other: &Td3Agent) -> Result<()> {
        self.actor.copy_from(&other.actor)?;
        self.critic1.copy_from(&other.critic1)?;
        self.critic2.copy_from(&other.critic2)
    }

    pub fn reset_optimizers(&mut self) {
        self.opt_actor = make_optimizer(self.cfg.optimizer, self.cfg.lr_actor, &self.actor);
        self.opt_critic1 = make_optimizer(self.cfg.optimizer, self.cfg.lr_critic, &self.critic1);
        self.opt_critic2 = make_optimizer(self.cfg.optimizer, self.cfg.lr_critic, &self.critic2);
        self.updates = 0;
        self.actor_updates = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::replay::{ReplayBuffer, Transition};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> Td3Config {
        Td3Config { hidden: vec![8], ..Td3Config::default() }
    }

    fn batch(rng: &mut ChaCha8Rng, s: usize, d: usize, n: usize) -> Batch {
        let mut buf = ReplayBuffer::new(n);
        for _ in 0..n {
            buf.push(Transition {
                state: (0..s).map(|_| rng.random_range(-1.0..1.0)).collect(),
                mask: vec![],
                cont: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
                reward: rng.random_range(-1.0..1.0),
                next_state: (0..s).map(|_| rng.random_range(-1.0..1.0)).collect(),
                terminal: false,
                task_id: 0,
            });
        }
        buf.sample(n, rng).unwrap()
    }

    #[test]
    fn smoothing_examples() {
        assert!((smooth_target_action(0.5, 0.7, 0.2, -1.0, 1.0) - 0.7).abs() < 1e-15);
        assert_eq!(smooth_target_action(0.95, 0.2, 0.3, -1.0, 1.0), 1.0);
        assert_eq!(smooth_target_action(-3.0, 0.0, 0.3, -1.0, 1.0), -1.0);
        assert_eq!(smooth_target_action(0.25, 0.0, 0.3, -1.0, 1.0), 0.25);
    }

    #[test]
    fn delayed_actor_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut a = Td3Agent::new(3, 2, small_cfg(), &mut rng).unwrap();
        let b = batch(&mut rng, 3, 2, 8);
        let n = (0..10).filter(|_| a.update(&b, &mut rng).unwrap().actor.is_some()).count();
        assert_eq!(n, 5);
        assert_eq!(a.actor_updates, 5);
    }

    #[test]
    fn zero_discount_target_is_reward() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = Td3Config { gamma: 0.0, ..small_cfg() };
        let a = Td3Agent::new(3, 2, cfg, &mut rng).unwrap();
        let b = batch(&mut rng, 3, 2, 5);
        assert_eq!(a.critic_targets(&b, &mut rng).unwrap(), b.rewards);
    }

    #[test]
    fn deterministic_act_is_repeatable() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Td3Agent::new(3, 4, small_cfg(), &mut rng).unwrap();
        let s = [0.1, -0.2, 0.3];
        assert_eq!(a.act(&s, false, &mut rng).unwrap(), a.act(&s, false, &mut rng).unwrap());
        let e = a.act(&s, true, &mut rng).unwrap();
        assert!(e.iter().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn actor_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Td3Agent::new(2, 2, small_cfg(), &mut rng).unwrap();
        let b = batch(&mut rng, 2, 2, 4);
        let (_, g) = a.actor_grads(&b).unwrap();
        let h = 1e-6;
        for i in 0..a.actor.num_params() {
            let mut p = a.clone();
            p.actor.params_mut()[i] += h;
            let mut m = a.clone();
            m.actor.params_mut()[i] -= h;
            let fd = (p.actor_grads(&b).unwrap().0 - m.actor_grads(&b).unwrap().0) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-7 * (1.0 + fd.abs()), "param {i}: {fd} vs {}", g[i]);
        }
    }
}
