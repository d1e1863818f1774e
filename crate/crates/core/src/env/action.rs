use std::f64::consts::{PI, SQRT_2};
use std::ops::Range;

use log::debug;
use nalgebra::DVector;
use num_complex::Complex64;

use super::config::EnvConfig;
use crate::error::{ensure, Result};
use crate::rsma::{BeamformingSet, RisConfig};

/// Positions of each action block inside the continuous action vector.
///
/// Order: `w_c`, `w_1..w_K` (each `N_BS` real parts then `N_BS` imaginary
/// parts), velocity (2), amplification (M), phase (M), common-rate shares (K).
/// The velocity block is absent for a fixed surface and the amplification
/// block for a passive one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionLayout {
    pub num_users: usize,
    pub num_elements: usize,
    pub n_bs: usize,
    pub has_velocity: bool,
    pub has_amp: bool,
}

impl ActionLayout {
    pub fn for_config(cfg: &EnvConfig) -> Self {
        Self {
            num_users: cfg.num_users,
            num_elements: cfg.num_elements(),
            n_bs: cfg.n_bs(),
            has_velocity: cfg.variant.fixed_position.is_none(),
            has_amp: !cfg.variant.passive_ris,
        }
    }

    pub fn beams(&self) -> Range<usize> {
        0..2 * self.n_bs * (self.num_users + 1)
    }

    /// Real/imaginary block of beam `b` (0 = common, `k + 1` = private k).
    pub fn beam(&self, b: usize) -> Range<usize> {
        let s = 2 * self.n_bs * b;
        s..s + 2 * self.n_bs
    }

    pub fn velocity(&self) -> Range<usize> {
        let s = self.beams().end;
        s..s + if self.has_velocity { 2 } else { 0 }
    }

    pub fn amp(&self) -> Range<usize> {
        let s = self.velocity().end;
        s..s + if self.has_amp { self.num_elements } else { 0 }
    }

    pub fn phase(&self) -> Range<usize> {
        let s = self.amp().end;
        s..s + self.num_elements
    }

    pub fn common_rate(&self) -> Range<usize> {
        let s = self.phase().end;
        s..s + self.num_users
    }

    /// Length `d` of the continuous action.
    pub fn dim(&self) -> usize {
        self.common_rate().end
    }
}

/// What an agent emits each slot: an element-selection mask and a
/// continuous vector in `[-1, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAction {
    pub sel_mask: Vec<bool>,
    pub raw_cont: Vec<f64>,
}

impl JointAction {
    pub fn zeros(layout: &ActionLayout) -> Self {
        Self { sel_mask: vec![false; layout.num_elements], raw_cont: vec![0.0; layout.dim()] }
    }
}

/// A decoded action in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalAction {
    pub beams: BeamformingSet,
    /// Commanded horizontal velocity, m/s.
    pub velocity: [f64; 2],
    pub ris: RisConfig,
    pub c_alloc: Vec<f64>,
}

fn affine(raw: f64, lo: f64, hi: f64) -> f64 {
    lo + (raw + 1.0) * 0.5 * (hi - lo)
}

/// Maps `[-1, 1]` coordinates to physical ranges. Out-of-range inputs are
/// clamped.
pub fn decode_action(action: &JointAction, cfg: &EnvConfig) -> Result<PhysicalAction> {
    let layout = ActionLayout::for_config(cfg);
    ensure!(
        action.raw_cont.len() == layout.dim() && action.sel_mask.len() == layout.num_elements,
        DimensionMismatch,
        "action has {} continuous and {} discrete entries, expected {} and {}",
        action.raw_cont.len(),
        action.sel_mask.len(),
        layout.dim(),
        layout.num_elements
    );
    let mut clamped = 0usize;
    let raw: Vec<f64> = action
        .raw_cont
        .iter()
        .map(|&x| {
            let c = if x.is_nan() { 0.0 } else { x.clamp(-1.0, 1.0) };
            if c != x {
                clamped += 1;
            }
            c
        })
        .collect();
    if clamped > 0 {
        debug!("clamped {clamped} action coordinates into [-1, 1]");
    }

    let n = layout.n_bs;
    let w_scale = (cfg.bs_power.pa_eff * cfg.bs_power.p_max).sqrt();
    let beam = |b: usize| -> DVector<Complex64> {
        let r = &raw[layout.beam(b)];
        DVector::from_iterator(n, (0..n).map(|i| Complex64::new(r[i] * w_scale, r[n + i] * w_scale)))
    };
    let beams = BeamformingSet { common: beam(0), private: (1..=layout.num_users).map(beam).collect() };

    let velocity = if layout.has_velocity {
        let v = &raw[layout.velocity()];
        let s = cfg.v_max / SQRT_2;
        [v[0] * s, v[1] * s]
    } else {
        [0.0, 0.0]
    };
    let amp = if layout.has_amp {
        raw[layout.amp()].iter().map(|&a| affine(a, 0.0, cfg.a_max_ris)).collect()
    } else {
        vec![1.0; layout.num_elements]
    };
    let phase = raw[layout.phase()].iter().map(|&p| affine(p, 0.0, 2.0 * PI)).collect();
    let c_alloc = raw[layout.common_rate()].iter().map(|&c| affine(c, 0.0, cfg.c_max)).collect();
    Ok(PhysicalAction { beams, velocity, ris: RisConfig::new(amp, phase, action.sel_mask.clone())?, c_alloc })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_dimension_formula() {
        let cfg = EnvConfig::table_defaults();
        let l = ActionLayout::for_config(&cfg);
        assert_eq!(l.dim(), 2 * 5 * 4 + 2 + 2 * 16 + 3);
        assert_eq!(l.dim(), 77);
        let mut fixed = cfg.clone();
        fixed.variant.fixed_position = Some([75.0, 75.0, 100.0]);
        assert_eq!(ActionLayout::for_config(&fixed).dim(), 75);
        let mut passive = cfg;
        passive.variant.passive_ris = true;
        assert_eq!(ActionLayout::for_config(&passive).dim(), 77 - 16);
    }

    #[test]
    fn midpoint_and_lower_bound_decoding() {
        let cfg = EnvConfig::table_defaults();
        let l = ActionLayout::for_config(&cfg);
        let mid = decode_action(&JointAction::zeros(&l), &cfg).unwrap();
        assert!(mid.ris.amp.iter().all(|&a| (a - 5.0).abs() < 1e-12));
        assert!(mid.ris.phase.iter().all(|&p| (p - PI).abs() < 1e-12));
        assert_eq!(mid.velocity, [0.0, 0.0]);
        assert!(mid.c_alloc.iter().all(|&c| (c - 2.5).abs() < 1e-12));
        assert_eq!(mid.beams.radiated_power(), 0.0);

        let low = JointAction { sel_mask: vec![true; 16], raw_cont: vec![-1.0; l.dim()] };
        let p = decode_action(&low, &cfg).unwrap();
        assert!(p.ris.amp.iter().all(|&a| a == 0.0));
        assert!(p.ris.phase.iter().all(|&a| a == 0.0));
        assert!(p.c_alloc.iter().all(|&a| a == 0.0));
        let vmin = -cfg.v_max / SQRT_2;
        assert!((p.velocity[0] - vmin).abs() < 1e-12);
        let w = -(cfg.bs_power.pa_eff * cfg.bs_power.p_max).sqrt();
        assert!((p.beams.common[0].re - w).abs() < 1e-15);
        assert!((p.beams.private[2][4].im - w).abs() < 1e-15);
    }

    #[test]
    fn phase_top_and_clamping() {
        let cfg = EnvConfig::table_defaults();
        let l = ActionLayout::for_config(&cfg);
        let mut a = JointAction::zeros(&l);
        a.raw_cont[l.phase().start] = 1.0;
        a.raw_cont[l.amp().start] = 7.0;
        let p = decode_action(&a, &cfg).unwrap();
        assert!((p.ris.phase[0] - 2.0 * PI).abs() < 1e-12);
        assert!((p.ris.amp[0] - cfg.a_max_ris).abs() < 1e-12);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let cfg = EnvConfig::table_defaults();
        let a = JointAction { sel_mask: vec![true; 3], raw_cont: vec![0.0; 4] };
        assert!(decode_action(&a, &cfg).is_err());
    }
}
