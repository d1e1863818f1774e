//! The joint agent: SAC picks the element mask, TD3 the continuous action,
//! and both learn from one shared replay buffer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::replay::{ReplayBuffer, Transition};
use super::sac::{SacAgent, SacConfig, SacLosses};
use super::td3::{Td3Agent, Td3Config, Td3Report};
use crate::env::{Env, JointAction, StepOutcome, TaskSpec, NUM_CONSTRAINTS};
use crate::error::{Error, Result};
use crate::nn::checkpoint::Bundle;
use crate::nn::Mlp;
use crate::power::energy_efficiency;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsatConfig {
    pub sac: SacConfig,
    pub td3: Td3Config,
    pub batch_size: usize,
    pub buffer_capacity: usize,
}

impl Default for MsatConfig {
    fn default() -> Self {
        Self { sac: SacConfig::default(), td3: Td3Config::default(), batch_size: 256, buffer_capacity: 100_000 }
    }
}

impl MsatConfig {
    /// Same hidden widths for every network of both heads.
    pub fn with_hidden(mut self, hidden: &[usize]) -> Self {
        self.sac.hidden = hidden.to_vec();
        self.td3.hidden = hidden.to_vec();
        self
    }
}

#[derive(Debug, Clone)]
pub struct MsatAgent {
    pub cfg: MsatConfig,
    pub sac: SacAgent,
    pub td3: Td3Agent,
}

/// Losses of one joint update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsatLosses {
    pub sac: SacLosses,
    pub td3: Td3Report,
}

impl MsatAgent {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        mask_dim: usize,
        action_dim: usize,
        cfg: MsatConfig,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(Self {
            sac: SacAgent::new(state_dim, mask_dim, cfg.sac.clone(), rng)?,
            td3: Td3Agent::new(state_dim, action_dim, cfg.td3.clone(), rng)?,
            cfg,
        })
    }

    /// Sized for an environment.
    pub fn for_env<R: Rng + ?Sized>(env: &Env, cfg: MsatConfig, rng: &mut R) -> Result<Self> {
        Self::new(env.state_dim(), env.num_elements(), env.action_dim(), cfg, rng)
    }

    /// Both heads read the same state vector.
    pub fn act<R: Rng + ?Sized>(&self, state: &[f64], explore: bool, rng: &mut R) -> Result<JointAction> {
        let (sel_mask, _) = self.sac.select(state, explore, rng)?;
        let raw_cont = self.td3.act(state, explore, rng)?;
        Ok(JointAction { sel_mask, raw_cont })
    }

    /// One SAC and one TD3 update on independently drawn batches, or `None`
    /// while the buffer holds fewer than a batch.
    pub fn update<R: Rng + ?Sized>(&mut self, buffer: &ReplayBuffer, rng: &mut R) -> Result<Option<MsatLosses>> {
        let b = self.cfg.batch_size;
        if buffer.len() < b {
            return Ok(None);
        }
        let sb = buffer.sample(b, rng)?;
        let sac = self.sac.update(&sb, rng)?;
        let tb = buffer.sample(b, rng)?;
        let td3 = self.td3.update(&tb, rng)?;
        Ok(Some(MsatLosses { sac, td3 }))
    }

    pub fn sync_targets(&mut self) {
        self.sac.sync_targets();
        self.td3.sync_targets();
    }

    pub fn reset_optimizers(&mut self) {
        self.sac.reset_optimizers();
        self.td3.reset_optimizers();
    }

    /// Copies the six online networks from another agent.
    pub fn copy_online_from(&mut self, other: &MsatAgent) -> Result<()> {
        self.sac.copy_online_from(&other.sac)?;
        self.td3.copy_online_from(&other.td3)
    }

    fn named(&self) -> Vec<(&'static str, &Mlp)> {
        vec![
            ("sac.actor", &self.sac.actor),
            ("sac.critic1", &self.sac.critic1),
            ("sac.critic2", &self.sac.critic2),
            ("sac.target1", &self.sac.target1),
            ("sac.target2", &self.sac.target2),
            ("td3.actor", &self.td3.actor),
            ("td3.target_actor", &self.td3.target_actor),
            ("td3.critic1", &self.td3.critic1),
            ("td3.critic2", &self.td3.critic2),
            ("td3.target1", &self.td3.target1),
            ("td3.target2", &self.td3.target2),
        ]
    }

    pub fn to_bundle(&self, metadata: String) -> Bundle {
        Bundle { metadata, nets: self.named().into_iter().map(|(n, m)| (n.to_string(), m.clone())).collect() }
    }

    /// Rebuilds an agent from a bundle written by [`MsatAgent::to_bundle`].
    /// Optimiser state starts fresh.
    pub fn from_bundle(bundle: &Bundle, cfg: MsatConfig) -> Result<Self> {
        let get = |n: &str| bundle.require(n).cloned();
        let sac_actor = get("sac.actor")?;
        let td3_actor = get("td3.actor")?;
        let state_dim = sac_actor.input_dim();
        let mask_dim = sac_actor.output_dim() / 2;
        let action_dim = td3_actor.output_dim();
        // weights are overwritten below; the seed only fixes the shapes
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let mut agent = Self::new(state_dim, mask_dim, action_dim, cfg, &mut rng)?;
        let load = |dst: &mut Mlp, n: &str| -> Result<()> {
            let src = bundle.require(n)?;
            dst.copy_from(src).map_err(|e| Error::Checkpoint(format!("network `{n}`: {e}")))
        };
        load(&mut agent.sac.actor, "sac.actor")?;
        load(&mut agent.sac.critic1, "sac.critic1")?;
        load(&mut agent.sac.critic2, "sac.critic2")?;
        load(&mut agent.sac.target1, "sac.target1")?;
        load(&mut agent.sac.target2, "sac.target2")?;
        load(&mut agent.td3.actor, "td3.actor")?;
        load(&mut agent.td3.target_actor, "td3.target_actor")?;
        load(&mut agent.td3.critic1, "td3.critic1")?;
        load(&mut agent.td3.critic2, "td3.critic2")?;
        load(&mut agent.td3.target1, "td3.target1")?;
        load(&mut agent.td3.target2, "td3.target2")?;
        agent.reset_optimizers();
        Ok(agent)
    }
}

/// Summary of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub mean_reward: f64,
    /// Mean of the per-slot `R_total / P_total`.
    pub avg_ee: f64,
    pub avg_sum_rate: f64,
    pub avg_power: f64,
    /// Slots in which `C{i+1}` was violated.
    pub violations: [u32; NUM_CONSTRAINTS],
    pub slots: usize,
    pub slot_rates: Vec<f64>,
    pub slot_powers: Vec<f64>,
}

/// How an episode interacts with the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeMode {
    pub explore: bool,
    pub learn: bool,
}

impl EpisodeMode {
    pub const TRAIN: Self = Self { explore: true, learn: true };
    pub const EVAL: Self = Self { explore: false, learn: false };
}

/// Runs one episode. In learning mode every transition goes to `buffer`
/// and a joint update follows each slot once the buffer is warm.
pub fn run_episode<R: Rng + ?Sized>(
    env: &mut Env,
    agent: &mut MsatAgent,
    buffer: &mut ReplayBuffer,
    task: &TaskSpec,
    mode: EpisodeMode,
    rng: &mut R,
) -> Result<EpisodeMetrics> {
    let mut state = env.reset(task)?;
    let mut tally = EpisodeTally::with_capacity(env.horizon());
    loop {
        let action = agent.act(&state.normalized, mode.explore, rng)?;
        let out = env.step(&action)?;
        tally.record(&out);
        if mode.learn {
            buffer.push(Transition {
                state: std::mem::take(&mut state.normalized),
                mask: action.sel_mask,
                cont: action.raw_cont,
                reward: out.reward,
                next_state: out.state.normalized.clone(),
                terminal: out.done,
                task_id: task.id,
            });
            agent.update(buffer, rng)?;
        }
        state = out.state;
        if out.done {
            break;
        }
    }
    tally.finish()
}

/// Accumulates per-slot outcomes into [`EpisodeMetrics`].
#[derive(Debug, Clone, Default)]
pub struct EpisodeTally {
    rewards: Vec<f64>,
    rates: Vec<f64>,
    powers: Vec<f64>,
    violations: [u32; NUM_CONSTRAINTS],
}

impl EpisodeTally {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            rewards: Vec::with_capacity(n),
            rates: Vec::with_capacity(n),
            powers: Vec::with_capacity(n),
            violations: [0; NUM_CONSTRAINTS],
        }
    }

    pub fn record(&mut self, out: &StepOutcome) {
        for (v, ok) in self.violations.iter_mut().zip(out.info.flags.sat) {
            *v += u32::from(!ok);
        }
        self.rewards.push(out.reward);
        self.rates.push(out.info.rates.r_total);
        self.powers.push(out.info.p_total);
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn finish(self) -> Result<EpisodeMetrics> {
        if self.rewards.is_empty() {
            return Err(Error::InvalidState("episode recorded no slots".into()));
        }
        let n = self.rewards.len() as f64;
        Ok(EpisodeMetrics {
            mean_reward: self.rewards.iter().sum::<f64>() / n,
            avg_ee: energy_efficiency(&self.rates, &self.powers)?,
            avg_sum_rate: self.rates.iter().sum::<f64>() / n,
            avg_power: self.powers.iter().sum::<f64>() / n,
            violations: self.violations,
            slots: self.rewards.len(),
            slot_rates: self.rates,
            slot_powers: self.powers,
        })
    }
}

/// One exploring, learning episode of the joint agent.
pub fn msat_train_episode<R: Rng + ?Sized>(
    env: &mut Env,
    agent: &mut MsatAgent,
    buffer: &mut ReplayBuffer,
    task: &TaskSpec,
    rng: &mut R,
) -> Result<EpisodeMetrics> {
    run_episode(env, agent, buffer, task, EpisodeMode::TRAIN, rng)
}
