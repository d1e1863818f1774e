use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::action::PhysicalAction;
use super::config::EnvConfig;
use crate::rsma::{common_rate_ok, RateReport};

pub const NUM_CONSTRAINTS: usize = 13;

/// Satisfaction of C1..C13; `sat[i]` is constraint `C{i+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintFlags {
    pub sat: [bool; NUM_CONSTRAINTS],
}

impl Default for ConstraintFlags {
    fn default() -> Self {
        Self { sat: [true; NUM_CONSTRAINTS] }
    }
}

impl ConstraintFlags {
    /// Flag for constraint `C{i}`, 1-based.
    pub fn get(&self, i: usize) -> bool {
        self.sat[i - 1]
    }

    pub fn set(&mut self, i: usize, ok: bool) {
        self.sat[i - 1] = ok;
    }

    pub fn violations(&self) -> usize {
        self.sat.iter().filter(|s| !**s).count()
    }

    pub fn all_satisfied(&self) -> bool {
        self.violations() == 0
    }
}

/// Flight quantities of one slot, taken before the position clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub proposed_pos: [f64; 3],
    pub velocity: [f64; 2],
    pub prev_velocity: [f64; 2],
}

/// Power terms that enter the budget constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerDraw {
    /// `(1/ε)(Σ‖w_k‖² + ‖w_c‖²)`.
    pub transmit: f64,
    pub ris_output: f64,
}

/// Evaluates C1..C13 for one slot.
pub fn evaluate_constraints(
    phys: &PhysicalAction,
    rates: &RateReport,
    power: &PowerDraw,
    kin: &Kinematics,
    cfg: &EnvConfig,
) -> ConstraintFlags {
    let mut f = ConstraintFlags::default();
    f.set(1, common_rate_ok(&phys.c_alloc, &rates.r_common));
    f.set(2, (0..cfg.num_users).all(|k| phys.c_alloc[k] + rates.r_private[k] >= cfg.qos[k]));
    f.set(3, power.transmit <= cfg.bs_power.p_max);
    f.set(4, power.ris_output <= cfg.ris_power.amp_eff * cfg.ris_power.p_amp_budget);
    f.set(5, phys.ris.amp.iter().all(|&a| (0.0..=cfg.a_max_ris).contains(&a)));
    f.set(6, phys.ris.phase.iter().all(|&p| (0.0..=2.0 * PI).contains(&p)));
    f.set(7, (0..3).all(|i| cfg.q_min[i] <= kin.proposed_pos[i] && kin.proposed_pos[i] <= cfg.q_max[i]));
    // C8 (position update) and C9 (initial position) hold by construction.
    let speed = kin.velocity[0].hypot(kin.velocity[1]);
    f.set(10, speed <= cfg.v_max);
    let dv = (kin.velocity[0] - kin.prev_velocity[0]).hypot(kin.velocity[1] - kin.prev_velocity[1]);
    f.set(11, dv <= cfg.a_max_uav * cfg.slot_dt + 1e-12);
    f.set(12, phys.ris.sel.len() <= cfg.num_elements());
    // C13: the mask is boolean by type.
    f
}

/// Penalised reward `r = EE·(1 − #violations)`.
pub fn reward(ee: f64, flags: &ConstraintFlags) -> f64 {
    ee * (1.0 - flags.violations() as f64)
}
