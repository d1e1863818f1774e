//! First-order MAML around the joint agent.
//!
//! Each task owns an environment, a replay buffer and an adapted copy of
//! the global networks. Within a slot every task acts, stores its
//! transition and takes `n_inner` plain gradient steps away from the
//! globals; the gradients of the adapted copies on fresh validation
//! batches are then summed and applied to the globals.

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{
    msat_train_episode, Batch, EpisodeMetrics, EpisodeTally, MsatAgent, ReplayBuffer, SacGrads, Td3Grads, Transition,
};
use crate::env::{mix_seed, Env, EnvConfig, TaskSpec};
use crate::error::{ensure, Error, Result};
use crate::nn::checkpoint::Bundle;
use crate::nn::{Mlp, Optimizer, OptimizerKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetaConfig {
    /// Number of training tasks.
    pub tasks: usize,
    /// Gradient steps per inner adaptation.
    pub n_inner: usize,
    pub inner_lr: f64,
    /// Outer step size β.
    pub beta_meta: f64,
    pub outer_optimizer: OptimizerKind,
    pub e_trn: usize,
    pub e_adp: usize,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            tasks: 5,
            n_inner: 1,
            inner_lr: 3e-4,
            beta_meta: 1e-4,
            outer_optimizer: OptimizerKind::Adam,
            e_trn: 200,
            e_adp: 100,
        }
    }
}

impl MetaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tasks == 0 {
            return Err(Error::config("meta.tasks", "at least one task is required"));
        }
        if !(self.inner_lr >= 0.0 && self.inner_lr.is_finite()) {
            return Err(Error::config("meta.inner_lr", "must be finite and non-negative"));
        }
        if !(self.beta_meta >= 0.0 && self.beta_meta.is_finite()) {
            return Err(Error::config("meta.beta_meta", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Validation input for one task's contribution to the outer step.
/// The seed drives the policy samples drawn inside the loss.
#[derive(Debug, Clone)]
pub struct Validation {
    pub sac: Batch,
    pub td3: Batch,
    pub seed: u64,
}

impl Validation {
    pub fn sample<R: Rng + ?Sized>(buffer: &ReplayBuffer, batch: usize, rng: &mut R) -> Result<Self> {
        Ok(Self { sac: buffer.sample(batch, rng)?, td3: buffer.sample(batch, rng)?, seed: rng.random() })
    }
}

/// Summed outer gradient over tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaGradient {
    pub sac: SacGrads,
    pub td3: Td3Grads,
    pub tasks: usize,
}

fn add_into(acc: &mut [f64], g: &[f64]) {
    acc.iter_mut().zip(g).for_each(|(a, b)| *a += b);
}

impl MetaGradient {
    /// Gradient of one adapted agent's losses on its validation batches.
    pub fn of(adapted: &MsatAgent, val: &Validation) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(val.seed);
        Ok(Self {
            sac: adapted.sac.gradients(&val.sac, &mut rng)?,
            td3: adapted.td3.gradients(&val.td3, &mut rng)?,
            tasks: 1,
        })
    }

    pub fn accumulate(&mut self, other: &MetaGradient) {
        add_into(&mut self.sac.actor, &other.sac.actor);
        add_into(&mut self.sac.critic1, &other.sac.critic1);
        add_into(&mut self.sac.critic2, &other.sac.critic2);
        add_into(&mut self.td3.actor, &other.td3.actor);
        add_into(&mut self.td3.critic1, &other.td3.critic1);
        add_into(&mut self.td3.critic2, &other.td3.critic2);
        self.sac.actor_loss += other.sac.actor_loss;
        self.sac.critic_loss += other.sac.critic_loss;
        self.td3.actor_loss += other.td3.actor_loss;
        self.td3.critic_loss += other.td3.critic_loss;
        self.tasks += other.tasks;
    }
}

/// Optimiser state for the six global online networks.
#[derive(Debug, Clone)]
pub struct OuterOptimizer {
    opts: [Optimizer; 6],
}

impl OuterOptimizer {
    pub fn new(kind: OptimizerKind, beta: f64, globals: &MsatAgent) -> Self {
        let mk = |m: &Mlp| Optimizer::new(kind, beta, m.num_params());
        Self {
            opts: [
                mk(&globals.sac.actor),
                mk(&globals.sac.critic1),
                mk(&globals.sac.critic2),
                mk(&globals.td3.actor),
                mk(&globals.td3.critic1),
                mk(&globals.td3.critic2),
            ],
        }
    }

    pub fn step(&mut self, globals: &mut MsatAgent, g: &MetaGradient) -> Result<()> {
        let [a, b, c, d, e, f] = &mut self.opts;
        a.step(globals.sac.actor.params_mut(), &g.sac.actor)?;
        b.step(globals.sac.critic1.params_mut(), &g.sac.critic1)?;
        c.step(globals.sac.critic2.params_mut(), &g.sac.critic2)?;
        d.step(globals.td3.actor.params_mut(), &g.td3.actor)?;
        e.step(globals.td3.critic1.params_mut(), &g.td3.critic1)?;
        f.step(globals.td3.critic2.params_mut(), &g.td3.critic2)
    }
}

/// Resets `adapted`'s online networks to the globals, then takes
/// `n_inner` SGD steps on batches from `buffer` followed by soft target
/// updates. Returns `false` (with `adapted` equal to the globals) when the
/// buffer is still smaller than a batch.
pub fn inner_adapt<R: Rng + ?Sized>(
    adapted: &mut MsatAgent,
    globals: &MsatAgent,
    buffer: &ReplayBuffer,
    meta: &MetaConfig,
    rng: &mut R,
) -> Result<bool> {
    adapted.copy_online_from(globals)?;
    let b = adapted.cfg.batch_size;
    if buffer.len() < b {
        return Ok(false);
    }
    for _ in 0..meta.n_inner {
        let sb = buffer.sample(b, rng)?;
        let g = adapted.sac.gradients(&sb, rng)?;
        adapted.sac.sgd_step(&g, meta.inner_lr);
        let tb = buffer.sample(b, rng)?;
        let g = adapted.td3.gradients(&tb, rng)?;
        adapted.td3.sgd_step(&g, meta.inner_lr);
        adapted.sac.soft_update_targets()?;
        adapted.td3.soft_update_targets()?;
    }
    Ok(true)
}

/// Sums the validation gradients of every task that has a validation
/// batch and applies them to the globals. Returns the number of tasks
/// that contributed.
pub fn outer_update(
    globals: &mut MsatAgent,
    opt: &mut OuterOptimizer,
    adapted: &[&MsatAgent],
    vals: &[Option<Validation>],
) -> Result<usize> {
    ensure!(
        adapted.len() == vals.len(),
        DimensionMismatch,
        "{} adapted agents but {} validation entries",
        adapted.len(),
        vals.len()
    );
    let mut total: Option<MetaGradient> = None;
    for (t, (agent, val)) in adapted.iter().zip(vals).enumerate() {
        let Some(val) = val else {
            debug!("task {t}: no validation batch, skipped in outer update");
            continue;
        };
        let g = MetaGradient::of(agent, val)?;
        match &mut total {
            Some(acc) => acc.accumulate(&g),
            None => total = Some(g),
        }
    }
    let Some(g) = total else { return Ok(0) };
    opt.step(globals, &g)?;
    Ok(g.tasks)
}

/// Everything one training task owns.
#[derive(Debug, Clone)]
struct TaskSlot {
    spec: TaskSpec,
    env: Env,
    buffer: ReplayBuffer,
    agent: MsatAgent,
}

/// Per-task episode metrics from meta-training.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetaHistory {
    /// `episodes[t][e]` is task `t`'s episode `e`.
    pub episodes: Vec<Vec<EpisodeMetrics>>,
}

impl MetaHistory {
    /// Mean reward series of each task.
    pub fn reward_series(&self) -> Vec<Vec<f64>> {
        self.episodes.iter().map(|s| s.iter().map(|m| m.mean_reward).collect()).collect()
    }
}

/// Global networks and the tasks they were trained on.
#[derive(Debug, Clone)]
pub struct MetaLearner {
    pub cfg: MetaConfig,
    pub globals: MsatAgent,
    pub outer: OuterOptimizer,
    tasks: Vec<TaskSlot>,
}

impl MetaLearner {
    /// `env_cfg.seed` seeds task `t`'s environment through [`mix_seed`].
    pub fn new(globals: MsatAgent, tasks: Vec<TaskSpec>, env_cfg: &EnvConfig, cfg: MetaConfig) -> Result<Self> {
        cfg.validate()?;
        ensure!(!tasks.is_empty(), InvalidArgument, "meta-training needs at least one task");
        let outer = OuterOptimizer::new(cfg.outer_optimizer, cfg.beta_meta, &globals);
        let tasks = tasks
            .into_iter()
            .enumerate()
            .map(|(i, spec)| {
                spec.validate(env_cfg)?;
                let mut c = env_cfg.clone();
                c.seed = mix_seed(env_cfg.seed, i as u64 + 1);
                Ok(TaskSlot {
                    spec,
                    env: Env::new(c)?,
                    buffer: ReplayBuffer::new(globals.cfg.buffer_capacity),
                    agent: globals.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { cfg, globals, outer, tasks })
    }

    pub fn task_specs(&self) -> Vec<TaskSpec> {
        self.tasks.iter().map(|t| t.spec.clone()).collect()
    }

    /// Task `t`'s replay buffer.
    pub fn buffer(&self, t: usize) -> &ReplayBuffer {
        &self.tasks[t].buffer
    }

    /// One slot-major meta-training episode over all tasks.
    pub fn train_episode<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<EpisodeMetrics>> {
        let mut states = Vec::with_capacity(self.tasks.len());
        for slot in &mut self.tasks {
            states.push(slot.env.reset(&slot.spec)?.normalized);
            slot.agent.copy_online_from(&self.globals)?;
            slot.agent.sync_targets();
        }
        let horizon = self.tasks[0].env.horizon();
        let mut tallies: Vec<_> = (0..self.tasks.len()).map(|_| EpisodeTally::with_capacity(horizon)).collect();
        let batch = self.globals.cfg.batch_size;
        loop {
            let mut done = true;
            for (t, slot) in self.tasks.iter_mut().enumerate() {
                let action = slot.agent.act(&states[t], true, rng)?;
                let out = slot.env.step(&action)?;
                tallies[t].record(&out);
                slot.buffer.push(Transition {
                    state: std::mem::replace(&mut states[t], out.state.normalized.clone()),
                    mask: action.sel_mask,
                    cont: action.raw_cont,
                    reward: out.reward,
                    next_state: out.state.normalized,
                    terminal: out.done,
                    task_id: slot.spec.id,
                });
                done &= out.done;
                inner_adapt(&mut slot.agent, &self.globals, &slot.buffer, &self.cfg, rng)?;
            }
            let vals = self
                .tasks
                .iter()
                .map(|s| {
                    if s.buffer.len() >= batch {
                        Validation::sample(&s.buffer, batch, rng).map(Some)
                    } else {
                        Ok(None)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let adapted: Vec<&MsatAgent> = self.tasks.iter().map(|s| &s.agent).collect();
            outer_update(&mut self.globals, &mut self.outer, &adapted, &vals)?;
            if done {
                break;
            }
        }
        tallies.into_iter().map(EpisodeTally::finish).collect()
    }

    /// Runs `cfg.e_trn` episodes and returns the per-task history.
    pub fn train<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<MetaHistory> {
        self.train_with(rng, |_, _| {})
    }

    /// As [`MetaLearner::train`], calling `on_episode(e, metrics)` after each episode.
    pub fn train_with<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        mut on_episode: impl FnMut(usize, &[EpisodeMetrics]),
    ) -> Result<MetaHistory> {
        let mut history = MetaHistory { episodes: vec![Vec::with_capacity(self.cfg.e_trn); self.tasks.len()] };
        for e in 0..self.cfg.e_trn {
            let metrics = self.train_episode(rng)?;
            on_episode(e, &metrics);
            for (h, m) in history.episodes.iter_mut().zip(metrics) {
                h.push(m);
            }
        }
        self.globals.sync_targets();
        Ok(history)
    }

    /// Bundle holding the globals and, in the metadata, the task registry.
    pub fn to_bundle(&self) -> Result<Bundle> {
        let meta =
            MetaCheckpointInfo { kind: META_CHECKPOINT_KIND.into(), meta: self.cfg.clone(), tasks: self.task_specs() };
        Ok(self.globals.to_bundle(serde_json::to_string(&meta)?))
    }
}

const META_CHECKPOINT_KIND: &str = "meta";

/// Metadata stored alongside the global networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaCheckpointInfo {
    pub kind: String,
    pub meta: MetaConfig,
    pub tasks: Vec<TaskSpec>,
}

impl MetaCheckpointInfo {
    pub fn from_bundle(bundle: &Bundle) -> Result<Self> {
        let info: Self = serde_json::from_str(&bundle.metadata)
            .map_err(|e| Error::Checkpoint(format!("meta-checkpoint metadata: {e}")))?;
        if info.kind != META_CHECKPOINT_KIND {
            return Err(Error::Checkpoint(format!("expected a meta-checkpoint, found kind `{}`", info.kind)));
        }
        Ok(info)
    }
}

/// Result of adapting the globals to a new task.
#[derive(Debug, Clone)]
pub struct Adaptation {
    pub agent: MsatAgent,
    pub episodes: Vec<EpisodeMetrics>,
}

impl Adaptation {
    pub fn reward_curve(&self) -> Vec<f64> {
        self.episodes.iter().map(|m| m.mean_reward).collect()
    }
}

/// Starts a fresh agent at the globals (targets synced, optimisers reset)
/// and trains it with the ordinary joint loop for `episodes` episodes on a
/// buffer of its own.
pub fn meta_adapt<R: Rng + ?Sized>(
    globals: &MsatAgent,
    env: &mut Env,
    task: &TaskSpec,
    episodes: usize,
    rng: &mut R,
) -> Result<Adaptation> {
    let mut agent = globals.clone();
    agent.sync_targets();
    agent.reset_optimizers();
    let mut buffer = ReplayBuffer::new(agent.cfg.buffer_capacity);
    let mut out = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let m = msat_train_episode(env, &mut agent, &mut buffer, task, rng)?;
        if !m.mean_reward.is_finite() {
            warn!("adaptation episode {e} produced a non-finite reward");
        }
        out.push(m);
    }
    Ok(Adaptation { agent, episodes: out })
}
