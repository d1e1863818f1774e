//! Rotary-wing propulsion power, active-RIS power, total system power and
//! energy efficiency.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::rsma::{BeamformingSet, RisConfig, RisMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Rotary-wing airframe constants.
///
/// `air_density` is the fluid density that the propulsion model multiplies
/// into the parasite and induced terms; it is unrelated to the array
/// steering constant in [`crate::channel::ChannelParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavPowerParams {
    /// Blade-profile power in hover, W.
    pub p_b: f64,
    /// Induced power in hover, W.
    pub p_i: f64,
    /// Blade angular velocity, rad/s.
    pub omega: f64,
    /// Rotor radius, m.
    pub rotor_r: f64,
    /// Fuselage drag ratio.
    pub d_ratio: f64,
    /// kg/m³.
    pub air_density: f64,
    /// Rotor solidity.
    pub solidity: f64,
    /// Rotor disk area, m².
    pub disk_area: f64,
    /// Mean rotor induced velocity in hover, m/s.
    pub v_induced: f64,
    /// Profile drag coefficient.
    pub profile_drag: f64,
    /// Incremental correction to induced power.
    pub corr: f64,
    /// Aircraft weight, N.
    pub weight: f64,
}

impl Default for UavPowerParams {
    fn default() -> Self {
        Self {
            p_b: 79.85,
            p_i: 88.63,
            omega: 300.0,
            rotor_r: 0.4,
            d_ratio: 0.3,
            air_density: 1.225,
            solidity: 0.05,
            disk_area: 0.503,
            v_induced: 4.03,
            profile_drag: 0.02,
            corr: 0.1,
            weight: 20.0,
        }
    }
}

impl UavPowerParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("p_b", self.p_b),
            ("p_i", self.p_i),
            ("omega", self.omega),
            ("rotor_r", self.rotor_r),
            ("air_density", self.air_density),
            ("solidity", self.solidity),
            ("disk_area", self.disk_area),
            ("v_induced", self.v_induced),
            ("weight", self.weight),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("uav.{name}"), format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [("d_ratio", self.d_ratio), ("profile_drag", self.profile_drag), ("corr", self.corr)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("uav.{name}"), format!("must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Blade-profile hover power recomputed from the rotor description,
    /// `ρ/8 · air_density · solidity · A · Ω³ R³`.
    pub fn blade_profile_from_rotor(&self) -> f64 {
        self.profile_drag / 8.0
            * self.air_density
            * self.solidity
            * self.disk_area
            * (self.omega * self.rotor_r).powi(3)
    }

    /// Induced hover power recomputed from weight and disk loading,
    /// `(1 + ι) W^{3/2} / √(2 · air_density · A)`.
    pub fn induced_from_weight(&self) -> f64 {
        (1.0 + self.corr) * self.weight.powf(1.5) / (2.0 * self.air_density * self.disk_area).sqrt()
    }
}

/// The three additive terms of the propulsion model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropulsionTerms {
    pub blade: f64,
    pub parasite: f64,
    pub induced: f64,
}

impl PropulsionTerms {
    pub fn total(&self) -> f64 {
        self.blade + self.parasite + self.induced
    }
}

pub fn propulsion_terms(speed: f64, p: &UavPowerParams) -> Result<PropulsionTerms> {
    ensure!(speed >= 0.0 && speed.is_finite(), InvalidArgument, "speed must be finite and non-negative, got {speed}");
    let v2 = speed * speed;
    let tip2 = (p.omega * p.rotor_r).powi(2);
    let blade = p.p_b * (1.0 + 3.0 * v2 / tip2);
    let parasite = 0.5 * p.d_ratio * p.air_density * p.solidity * p.disk_area * v2 * speed;
    let vi2 = p.v_induced * p.v_induced;
    let inner = (1.0 + v2 * v2 / (4.0 * vi2 * vi2)).sqrt() - v2 / (2.0 * vi2);
    // The inner term is non-negative analytically; clamp away round-off.
    let induced = p.p_i * inner.max(0.0).sqrt();
    Ok(PropulsionTerms { blade, parasite, induced })
}

/// Propulsion power of the rotary-wing UAV at the given horizontal speed.
pub fn propulsion_power(speed: f64, p: &UavPowerParams) -> Result<f64> {
    Ok(propulsion_terms(speed, p)?.total())
}

/// Hover power `P_b + P_i`.
pub fn hover_power(p: &UavPowerParams) -> f64 {
    p.p_b + p.p_i
}

/// Active-RIS circuit constants. Values are in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisPowerParams {
    /// Switching and control power per element.
    pub p_c: f64,
    /// Bias power per element.
    pub p_dc: f64,
    /// Amplifier efficiency η.
    pub amp_eff: f64,
    /// Inverse efficiency ν.
    pub nu: f64,
    /// Amplifier output budget `P_I`.
    pub p_amp_budget: f64,
    /// Charge static power for all M elements rather than the ON ones.
    pub static_power_counts_all: bool,
}

impl RisPowerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.amp_eff > 0.0 && self.amp_eff <= 1.0) {
            return Err(Error::config("ris.eta", format!("must lie in (0, 1], got {}", self.amp_eff)));
        }
        if (self.nu * self.amp_eff - 1.0).abs() > 1e-12 {
            return Err(Error::config(
                "ris.nu",
                format!("must equal 1/eta, got nu = {} with eta = {}", self.nu, self.amp_eff),
            ));
        }
        if !(self.p_amp_budget >= 0.0) {
            return Err(Error::config("ris.p_i", "budget must be non-negative"));
        }
        if !(self.p_c >= 0.0 && self.p_dc >= 0.0) {
            return Err(Error::config("ris.p_c", "per-element powers must be non-negative"));
        }
        Ok(())
    }
}

/// Base-station amplifier and circuit constants. Values are in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsPowerParams {
    /// Power-amplifier efficiency ε.
    pub pa_eff: f64,
    pub p_cir_bs: f64,
    pub p_cir_user: f64,
    pub p_max: f64,
}

impl BsPowerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.pa_eff > 0.0 && self.pa_eff <= 1.0) {
            return Err(Error::config("bs.epsilon", format!("must lie in (0, 1], got {}", self.pa_eff)));
        }
        if !(self.p_max > 0.0) {
            return Err(Error::config("bs.p_max", "must be positive"));
        }
        Ok(())
    }

    /// `(1/ε)(Σ‖w_k‖² + ‖w_c‖²)`.
    pub fn transmit_power(&self, bf: &BeamformingSet) -> f64 {
        bf.radiated_power() / self.pa_eff
    }
}

/// Amplifier output power of the active RIS:
/// `Σ_k ‖F'G w_k‖² + ‖F'G w_c‖² + σ_z² ‖F'‖_F²`.
pub fn ris_output_power(
    f_prime: &RisMatrix,
    g: &DMatrix<Complex64>,
    bf: &BeamformingSet,
    sigma_z2: f64,
) -> Result<f64> {
    ensure!(
        g.nrows() == f_prime.0.len() && g.ncols() == bf.n_bs(),
        DimensionMismatch,
        "G is {}×{}, F' has {} entries, beamformers have {} antennas",
        g.nrows(),
        g.ncols(),
        f_prime.0.len(),
        bf.n_bs()
    );
    let reflected = |w: &nalgebra::DVector<Complex64>| -> f64 {
        let gw = g * w;
        gw.iter().zip(f_prime.0.iter()).map(|(x, f)| (f * x).norm_sqr()).sum()
    };
    let signal: f64 = bf.private.iter().map(reflected).sum::<f64>() + reflected(&bf.common);
    Ok(signal + sigma_z2 * f_prime.frobenius_sq())
}

/// `N (P_c + P_DC) + ν p_out`, with `N` the number of ON elements unless
/// `static_power_counts_all` is set.
pub fn ris_power(ris: &RisConfig, p_out: f64, p: &RisPowerParams) -> Result<f64> {
    ensure!(p_out >= 0.0, InvalidArgument, "output power must be non-negative, got {p_out}");
    let n = if p.static_power_counts_all { ris.len() } else { ris.num_on() };
    Ok(n as f64 * (p.p_c + p.p_dc) + p.nu * p_out)
}

/// Total consumption of BS, circuits, UAV and RIS for one slot.
pub fn total_power(bf: &BeamformingSet, p_bs: &BsPowerParams, p_uav: f64, p_ris: f64, k: usize) -> f64 {
    p_bs.transmit_power(bf) + p_bs.p_cir_bs + k as f64 * p_bs.p_cir_user + p_uav + p_ris
}

/// Mean of the per-slot ratios `R_total(l) / P_total(l)`.
pub fn energy_efficiency(rates: &[f64], powers: &[f64]) -> Result<f64> {
    ensure!(rates.len() == powers.len(), DimensionMismatch, "{} rates but {} powers", rates.len(), powers.len());
    ensure!(!rates.is_empty(), InvalidArgument, "need at least one slot");
    if let Some(l) = powers.iter().position(|p| !(*p > 0.0)) {
        return Err(Error::InvalidState(format!("total power in slot {l} is {} (must be positive)", powers[l])));
    }
    let sum: f64 = rates.iter().zip(powers).map(|(r, p)| r / p).sum();
    Ok(sum / rates.len() as f64)
}
