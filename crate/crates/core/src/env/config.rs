use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::power::{BsPowerParams, RisPowerParams, UavPowerParams};
use crate::rsma::SinrOptions;
use crate::units::{db_to_amplitude, db_to_linear, dbm_to_watts};

/// Which physical variant of the network is simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Variant {
    /// Unit amplification, no amplifier noise and no amplifier power.
    pub passive_ris: bool,
    /// Pin the surface at this position with zero velocity.
    pub fixed_position: Option<[f64; 3]>,
}

/// Fixed per-block divisors applied to the state before it reaches the
/// networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateScales {
    pub position: f64,
    pub velocity: f64,
    pub channel: f64,
    pub rate: f64,
    pub power: f64,
    pub accel: f64,
    pub reward: f64,
}

/// Every constant of the simulated network. Powers are in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub num_users: usize,
    pub channel: ChannelParams,
    pub horizon: usize,
    pub slot_dt: f64,
    pub bs_pos: [f64; 3],
    pub q_min: [f64; 3],
    pub q_max: [f64; 3],
    pub uav_init: [f64; 3],
    pub v_max: f64,
    pub a_max_uav: f64,
    /// QoS threshold `Π_k` per user, bps/Hz.
    pub qos: Vec<f64>,
    /// Largest amplification factor (linear amplitude).
    pub a_max_ris: f64,
    /// Upper end of the common-rate share action, bps/Hz.
    pub c_max: f64,
    pub sigma_z2: f64,
    pub sigma_k2: f64,
    pub uav_power: UavPowerParams,
    pub ris_power: RisPowerParams,
    pub bs_power: BsPowerParams,
    pub sinr: SinrOptions,
    /// User random-walk speed scale, m/s.
    pub user_step_std: f64,
    pub scales: StateScales,
    pub variant: Variant,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self::table_defaults()
    }
}

impl EnvConfig {
    /// Simulation parameters of the reference scenario: K = 3 users,
    /// a 4×4 surface, five BS antennas and a 40 s horizon in 0.1 s slots.
    pub fn table_defaults() -> Self {
        let c0 = 0.001;
        let p_max = dbm_to_watts(25.0);
        let eta = 0.8;
        Self {
            num_users: 3,
            channel: ChannelParams {
                c0,
                d0: 1.0,
                alpha_bs_u: 3.0,
                alpha_u_k: 3.0,
                k_bs_u: db_to_linear(3.0),
                k_u_k: db_to_linear(3.0),
                zeta_phase: std::f64::consts::PI,
                mx: 4,
                my: 4,
                n_bs: 5,
                use_printed_cos_beta: false,
            },
            horizon: 400,
            slot_dt: 0.1,
            bs_pos: [0.0, 0.0, 10.0],
            q_min: [0.0, 0.0, 100.0],
            q_max: [150.0, 150.0, 100.0],
            uav_init: [75.0, 75.0, 100.0],
            v_max: 10.0,
            a_max_uav: 6.0,
            qos: vec![2.0; 3],
            a_max_ris: db_to_amplitude(20.0),
            c_max: 5.0,
            sigma_z2: dbm_to_watts(-80.0),
            sigma_k2: dbm_to_watts(-80.0),
            uav_power: UavPowerParams::default(),
            ris_power: RisPowerParams {
                p_c: dbm_to_watts(-10.0),
                p_dc: dbm_to_watts(-5.0),
                amp_eff: eta,
                nu: 1.25,
                p_amp_budget: dbm_to_watts(10.0),
                static_power_counts_all: false,
            },
            bs_power: BsPowerParams { pa_eff: 0.8, p_cir_bs: 1.0, p_cir_user: 5e-3, p_max },
            sinr: SinrOptions::default(),
            user_step_std: 1.0,
            scales: StateScales {
                position: 150.0,
                velocity: 10.0,
                channel: c0.sqrt(),
                rate: 10.0,
                power: p_max,
                accel: 6.0,
                reward: 1.0,
            },
            variant: Variant::default(),
            seed: 0,
        }
    }

    /// Small preset for quick experiments: K = 2, a 2×2 surface, two BS
    /// antennas, 50 slots.
    pub fn desk_scale() -> Self {
        let mut cfg = Self::table_defaults();
        cfg.set_num_users(2);
        cfg.channel.mx = 2;
        cfg.channel.my = 2;
        cfg.channel.n_bs = 2;
        cfg.horizon = 50;
        cfg
    }

    pub fn num_elements(&self) -> usize {
        self.channel.num_elements()
    }

    pub fn n_bs(&self) -> usize {
        self.channel.n_bs
    }

    pub fn altitude(&self) -> f64 {
        self.q_min[2]
    }

    /// Changes K, resizing the QoS list with its first entry.
    pub fn set_num_users(&mut self, k: usize) {
        let q = self.qos.first().copied().unwrap_or(2.0);
        self.num_users = k;
        self.qos = vec![q; k];
    }

    /// Sets an `mx × my` surface with roughly square shape for `m` elements.
    pub fn set_num_elements(&mut self, m: usize) {
        let mut mx = (m as f64).sqrt().floor() as usize;
        while mx > 1 && m % mx != 0 {
            mx -= 1;
        }
        self.channel.mx = mx.max(1);
        self.channel.my = m / mx.max(1);
    }

    pub fn set_p_max(&mut self, watts: f64) {
        self.bs_power.p_max = watts;
        self.scales.power = watts;
    }

    pub fn bs_position(&self) -> Vector3<f64> {
        Vector3::from(self.bs_pos)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |f: &str, m: String| Err(Error::config(f, m));
        if self.num_users == 0 {
            return fail("env.k", "at least one user is required".into());
        }
        if self.qos.len() != self.num_users {
            return fail("env.qos", format!("{} thresholds for {} users", self.qos.len(), self.num_users));
        }
        if self.horizon == 0 {
            return fail("env.horizon", "must be at least one slot".into());
        }
        if !(self.slot_dt > 0.0) {
            return fail("env.slot_dt", "must be positive".into());
        }
        for i in 0..3 {
            if !(self.q_min[i] <= self.uav_init[i] && self.uav_init[i] <= self.q_max[i]) {
                return fail("env.uav_init", "must lie inside [q_min, q_max]".into());
            }
        }
        if self.q_min[2] != self.q_max[2] {
            return fail("env.q_min", "flight altitude must be fixed (q_min.z = q_max.z)".into());
        }
        if !(self.v_max > 0.0 && self.a_max_uav > 0.0) {
            return fail("env.v_max", "speed and acceleration limits must be positive".into());
        }
        if !(self.a_max_ris >= 0.0 && self.c_max >= 0.0) {
            return fail("ris.a_max", "must be non-negative".into());
        }
        if !(self.sigma_k2 > 0.0 && self.sigma_z2 >= 0.0) {
            return fail("noise.sigma_k", "receiver noise must be positive".into());
        }
        if !(self.user_step_std >= 0.0) {
            return fail("users.step_std", "must be non-negative".into());
        }
        if let Some(p) = self.variant.fixed_position {
            for i in 0..3 {
                if !(self.q_min[i] <= p[i] && p[i] <= self.q_max[i]) {
                    return fail("baseline.fixed_position", "must lie inside [q_min, q_max]".into());
                }
            }
        }
        self.channel.validate().map_err(|e| Error::config("channel", e.to_string()))?;
        self.uav_power.validate()?;
        self.ris_power.validate()?;
        self.bs_power.validate()?;
        Ok(())
    }
}

/// One environment instance: where the users start and how they wander.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: usize,
    pub user_xy: Vec<[f64; 2]>,
    pub mobility_seed: u64,
}

impl TaskSpec {
    /// Users placed uniformly at random in the flight rectangle.
    pub fn random<R: Rng + ?Sized>(id: usize, cfg: &EnvConfig, rng: &mut R) -> Self {
        let user_xy = (0..cfg.num_users)
            .map(|_| [rng.random_range(cfg.q_min[0]..=cfg.q_max[0]), rng.random_range(cfg.q_min[1]..=cfg.q_max[1])])
            .collect();
        Self { id, user_xy, mobility_seed: rng.random() }
    }

    /// The task used when none is given: derived from the config seed.
    pub fn default_for(cfg: &EnvConfig) -> Self {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7a5c_0000_0000_0001);
        Self::random(0, cfg, &mut rng)
    }

    pub fn validate(&self, cfg: &EnvConfig) -> Result<()> {
        if self.user_xy.len() != cfg.num_users {
            return Err(Error::InvalidArgument(format!(
                "task {} has {} users, config expects {}",
                self.id,
                self.user_xy.len(),
                cfg.num_users
            )));
        }
        for p in &self.user_xy {
            let inside = (0..2).all(|i| cfg.q_min[i] <= p[i] && p[i] <= cfg.q_max[i]);
            if !inside || !p.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "task {} user at ({}, {}) lies outside the arena",
                    self.id, p[0], p[1]
                )));
            }
        }
        Ok(())
    }
}
