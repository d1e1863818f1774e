//! The episodic decision process around the physical model.
//!
//! Each slot the agent picks an element mask and a continuous action. The
//! environment moves the UAV, lets the users wander, redraws the channels,
//! evaluates rates, power and constraints, and returns the penalised
//! energy-efficiency reward.

mod action;
mod config;
mod constraints;

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use action::{decode_action, ActionLayout, JointAction, PhysicalAction};
pub use config::{EnvConfig, StateScales, TaskSpec, Variant};
pub use constraints::{evaluate_constraints, reward, ConstraintFlags, Kinematics, PowerDraw, NUM_CONSTRAINTS};

use crate::channel::{ChannelRealization, NetworkGeometry};
use crate::error::{ensure, Error, Result};
use crate::power::{propulsion_power, ris_output_power, ris_power, total_power};
use crate::rsma::{compute_rates, effective_ris_matrix, RateReport};

/// Length of the state vector for a configuration:
/// `3K + 1 + 6 + 2K + 1 + 2M·N_BS + 2M·K + M + d + 1`.
pub fn state_dim(cfg: &EnvConfig) -> usize {
    let k = cfg.num_users;
    let m = cfg.num_elements();
    let n = cfg.n_bs();
    let d = ActionLayout::for_config(cfg).dim();
    3 * k + 1 + 6 + 2 * k + 1 + 2 * m * n + 2 * m * k + m + d + 1
}

/// Observation in physical units and after per-block scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
}

impl StateVector {
    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }
}

/// Per-slot diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub flags: ConstraintFlags,
    pub rates: RateReport,
    /// Per-slot `R_total / P_total`.
    pub ee: f64,
    pub p_total: f64,
    pub p_transmit: f64,
    pub p_uav: f64,
    pub p_ris: f64,
    pub p_ris_out: f64,
    pub uav_pos: [f64; 3],
    pub proposed_pos: [f64; 3],
    pub user_pos: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: StateVector,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Inverse of [`decode_action`] (up to clamping).
pub fn encode_action(phys: &PhysicalAction, cfg: &EnvConfig) -> JointAction {
    let layout = ActionLayout::for_config(cfg);
    let inv = |x: f64, lo: f64, hi: f64| {
        if hi > lo {
            (2.0 * (x - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0)
        } else {
            0.0
        }
    };
    let mut raw = vec![0.0; layout.dim()];
    let w_scale = (cfg.bs_power.pa_eff * cfg.bs_power.p_max).sqrt();
    let n = layout.n_bs;
    let beams = std::iter::once(&phys.beams.common).chain(&phys.beams.private);
    for (b, w) in beams.enumerate() {
        let r = layout.beam(b);
        for i in 0..n {
            raw[r.start + i] = inv(w[i].re, -w_scale, w_scale);
            raw[r.start + n + i] = inv(w[i].im, -w_scale, w_scale);
        }
    }
    let vs = cfg.v_max / std::f64::consts::SQRT_2;
    for (j, i) in layout.velocity().enumerate() {
        raw[i] = inv(phys.velocity[j], -vs, vs);
    }
    for (j, i) in layout.amp().enumerate() {
        raw[i] = inv(phys.ris.amp[j], 0.0, cfg.a_max_ris);
    }
    for (j, i) in layout.phase().enumerate() {
        raw[i] = inv(phys.ris.phase[j], 0.0, 2.0 * PI);
    }
    for (j, i) in layout.common_rate().enumerate() {
        raw[i] = inv(phys.c_alloc[j], 0.0, cfg.c_max);
    }
    JointAction { sel_mask: phys.ris.sel.clone(), raw_cont: raw }
}

/// One Gaussian random-walk step per user, reflected at the arena edges.
/// The per-axis displacement standard deviation is `step_std·τ`.
pub fn user_mobility_step<R: Rng + ?Sized>(positions: &mut [[f64; 2]], rng: &mut R, cfg: &EnvConfig) {
    let std = cfg.user_step_std * cfg.slot_dt;
    for p in positions.iter_mut() {
        for (i, x) in p.iter_mut().enumerate() {
            let step: f64 = rng.sample(StandardNormal);
            *x = reflect(*x + std * step, cfg.q_min[i], cfg.q_max[i]);
        }
    }
}

fn reflect(mut x: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    for _ in 0..64 {
        if x < lo {
            x = 2.0 * lo - x;
        } else if x > hi {
            x = 2.0 * hi - x;
        } else {
            return x;
        }
    }
    x.clamp(lo, hi)
}

pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The simulated network as an episodic MDP.
#[derive(Debug, Clone)]
pub struct Env {
    cfg: EnvConfig,
    layout: ActionLayout,
    rng: ChaCha8Rng,
    mobility_rng: ChaCha8Rng,
    episodes: u64,
    task: Option<TaskSpec>,
    slot: usize,
    uav_pos: [f64; 3],
    uav_vel: [f64; 2],
    users: Vec<[f64; 2]>,
    channels: Option<ChannelRealization>,
    r_common: Vec<f64>,
    r_private: Vec<f64>,
    prev_action: JointAction,
    prev_reward: f64,
}

impl Env {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        let layout = ActionLayout::for_config(&cfg);
        let k = cfg.num_users;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            mobility_rng: ChaCha8Rng::seed_from_u64(0),
            episodes: 0,
            task: None,
            slot: 0,
            uav_pos: cfg.uav_init,
            uav_vel: [0.0; 2],
            users: Vec::new(),
            channels: None,
            r_common: vec![0.0; k],
            r_private: vec![0.0; k],
            prev_action: JointAction::zeros(&layout),
            prev_reward: 0.0,
            layout,
            cfg,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &ActionLayout {
        &self.layout
    }

    pub fn state_dim(&self) -> usize {
        state_dim(&self.cfg)
    }

    pub fn action_dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn num_elements(&self) -> usize {
        self.layout.num_elements
    }

    pub fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn uav_position(&self) -> [f64; 3] {
        self.uav_pos
    }

    pub fn user_positions(&self) -> &[[f64; 2]] {
        &self.users
    }

    pub fn channels(&self) -> Option<&ChannelRealization> {
        self.channels.as_ref()
    }

    pub fn task(&self) -> Option<&TaskSpec> {
        self.task.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.task.is_none() || self.slot >= self.cfg.horizon
    }

    fn geometry(&self) -> NetworkGeometry {
        NetworkGeometry::new(
            self.cfg.bs_position(),
            [self.uav_pos[0], self.uav_pos[1]],
            self.cfg.altitude(),
            self.uav_vel,
            &self.users,
        )
    }

    /// Starts an episode for `task`.
    pub fn reset(&mut self, task: &TaskSpec) -> Result<StateVector> {
        task.validate(&self.cfg)?;
        self.episodes += 1;
        self.mobility_rng = ChaCha8Rng::seed_from_u64(mix_seed(task.mobility_seed, self.episodes));
        self.task = Some(task.clone());
        self.slot = 0;
        self.uav_pos = self.cfg.variant.fixed_position.unwrap_or(self.cfg.uav_init);
        self.uav_vel = [0.0; 2];
        self.users = task.user_xy.clone();
        self.channels = Some(ChannelRealization::draw(&self.geometry(), &self.cfg.channel, &mut self.rng)?);
        self.r_common = vec![0.0; self.cfg.num_users];
        self.r_private = vec![0.0; self.cfg.num_users];
        self.prev_action = JointAction::zeros(&self.layout);
        self.prev_reward = 0.0;
        Ok(self.state())
    }

    /// Decodes and applies an agent action.
    pub fn step(&mut self, action: &JointAction) -> Result<StepOutcome> {
        let phys = decode_action(action, &self.cfg)?;
        self.apply(&phys, action.clone())
    }

    /// Applies an action given directly in physical units, bypassing the
    /// `[-1, 1]` decoding (so out-of-range commands can be expressed).
    pub fn step_physical(&mut self, phys: &PhysicalAction) -> Result<StepOutcome> {
        let raw = encode_action(phys, &self.cfg);
        self.apply(phys, raw)
    }

    fn apply(&mut self, phys: &PhysicalAction, raw: JointAction) -> Result<StepOutcome> {
        if self.task.is_none() {
            return Err(Error::InvalidState("step called before reset".into()));
        }
        if self.slot >= self.cfg.horizon {
            return Err(Error::InvalidState("episode is finished; call reset".into()));
        }
        let cfg = &self.cfg;
        let k = cfg.num_users;
        ensure!(
            phys.c_alloc.len() == k
                && phys.beams.num_users() == k
                && phys.ris.len() == cfg.num_elements()
                && phys.beams.n_bs() == cfg.n_bs(),
            DimensionMismatch,
            "physical action does not match the configured network"
        );

        let velocity = if cfg.variant.fixed_position.is_some() { [0.0; 2] } else { phys.velocity };
        let mut proposed = self.uav_pos;
        proposed[0] += velocity[0] * cfg.slot_dt;
        proposed[1] += velocity[1] * cfg.slot_dt;
        let kin = Kinematics { proposed_pos: proposed, velocity, prev_velocity: self.uav_vel };
        for (i, p) in proposed.iter().enumerate() {
            self.uav_pos[i] = p.clamp(cfg.q_min[i], cfg.q_max[i]);
        }
        self.uav_vel = velocity;

        user_mobility_step(&mut self.users, &mut self.mobility_rng, &self.cfg);
        let cfg = &self.cfg;
        let geom = NetworkGeometry::new(
            cfg.bs_position(),
            [self.uav_pos[0], self.uav_pos[1]],
            cfg.altitude(),
            self.uav_vel,
            &self.users,
        );
        let ch = ChannelRealization::draw(&geom, &cfg.channel, &mut self.rng)?;

        let passive = cfg.variant.passive_ris;
        let sigma_z2 = if passive { 0.0 } else { cfg.sigma_z2 };
        let f_prime = effective_ris_matrix(&phys.ris);
        let rates = compute_rates(&ch, &f_prime, &phys.beams, &phys.c_alloc, sigma_z2, cfg.sigma_k2, cfg.sinr)?;
        let p_ris_out = if passive { 0.0 } else { ris_output_power(&f_prime, &ch.g, &phys.beams, sigma_z2)? };
        let p_ris = ris_power(&phys.ris, p_ris_out, &cfg.ris_power)?;
        let p_uav = propulsion_power(velocity[0].hypot(velocity[1]), &cfg.uav_power)?;
        let p_total = total_power(&phys.beams, &cfg.bs_power, p_uav, p_ris, k);
        if !(p_total > 0.0 && p_total.is_finite()) {
            return Err(Error::InvalidState(format!("non-positive total power {p_total}")));
        }
        let ee = rates.r_total / p_total;
        let draw = PowerDraw { transmit: cfg.bs_power.transmit_power(&phys.beams), ris_output: p_ris_out };
        let flags = evaluate_constraints(phys, &rates, &draw, &kin, cfg);
        let r = reward(ee, &flags);

        self.channels = Some(ch);
        self.r_common.clone_from(&rates.r_common);
        self.r_private.clone_from(&rates.r_private);
        self.prev_action = raw;
        self.prev_reward = r;
        self.slot += 1;

        let info = StepInfo {
            flags,
            rates,
            ee,
            p_total,
            p_transmit: draw.transmit,
            p_uav,
            p_ris,
            p_ris_out,
            uav_pos: self.uav_pos,
            proposed_pos: proposed,
            user_pos: self.users.clone(),
        };
        Ok(StepOutcome { state: self.state(), reward: r, done: self.slot >= self.cfg.horizon, info })
    }

    /// Assembles the current observation.
    pub fn state(&self) -> StateVector {
        let cfg = &self.cfg;
        let s = &cfg.scales;
        let dim = self.state_dim();
        let mut raw = Vec::with_capacity(dim);
        let mut norm = Vec::with_capacity(dim);
        let mut push = |v: f64, scale: f64| {
            raw.push(v);
            norm.push(v / scale);
        };
        for k in 0..cfg.num_users {
            push(self.r_common[k], s.rate);
            push(self.r_private[k], s.rate);
            push(cfg.qos[k], s.rate);
        }
        push(cfg.bs_power.p_max, s.power);
        for &x in &self.uav_pos {
            push(x, s.position);
        }
        push(self.uav_vel[0], s.velocity);
        push(self.uav_vel[1], s.velocity);
        push(0.0, s.velocity);
        for p in &self.users {
            push(p[0], s.position);
            push(p[1], s.position);
        }
        push(cfg.a_max_uav, s.accel);
        let (m, n) = (cfg.num_elements(), cfg.n_bs());
        match &self.channels {
            Some(ch) => {
                for z in ch.g.iter() {
                    push(z.re, s.channel);
                }
                for z in ch.g.iter() {
                    push(z.im, s.channel);
                }
                for h in &ch.h_r {
                    for z in h.iter() {
                        push(z.re, s.channel);
                    }
                    for z in h.iter() {
                        push(z.im, s.channel);
                    }
                }
            }
            None => {
                for _ in 0..2 * m * (n + cfg.num_users) {
                    push(0.0, 1.0);
                }
            }
        }
        for &b in &self.prev_action.sel_mask {
            push(if b { 1.0 } else { 0.0 }, 1.0);
        }
        for &a in &self.prev_action.raw_cont {
            push(a, 1.0);
        }
        push(self.prev_reward, s.reward);
        debug_assert_eq!(raw.len(), dim);
        StateVector { raw, normalized: norm }
    }

    /// Geometry of the current slot.
    pub fn current_geometry(&self) -> NetworkGeometry {
        self.geometry()
    }

    pub fn uav_position_vector(&self) -> Vector3<f64> {
        Vector3::from(self.uav_pos)
    }
}
