//! Effective channels through the element-selected active RIS and the
//! rate-splitting SINRs and rates built on them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{ensure, Result};

/// Slack allowed when checking the common-rate split.
pub const COMMON_RATE_TOL: f64 = 1e-12;

/// Per-element amplification, phase shift and on/off selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisConfig {
    pub amp: Vec<f64>,
    pub phase: Vec<f64>,
    pub sel: Vec<bool>,
}

impl RisConfig {
    pub fn new(amp: Vec<f64>, phase: Vec<f64>, sel: Vec<bool>) -> Result<Self> {
        ensure!(
            amp.len() == phase.len() && phase.len() == sel.len(),
            DimensionMismatch,
            "amp/phase/sel lengths {}/{}/{} differ",
            amp.len(),
            phase.len(),
            sel.len()
        );
        ensure!(
            amp.iter().all(|a| a.is_finite() && *a >= 0.0),
            InvalidArgument,
            "amplification factors must be finite and non-negative"
        );
        Ok(Self { amp, phase, sel })
    }

    /// All elements on with unit amplification and zero phase.
    pub fn unity(m: usize) -> Self {
        Self { amp: vec![1.0; m], phase: vec![0.0; m], sel: vec![true; m] }
    }

    pub fn len(&self) -> usize {
        self.amp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amp.is_empty()
    }

    pub fn num_on(&self) -> usize {
        self.sel.iter().filter(|&&s| s).count()
    }
}

/// Diagonal of `F' = Λ ⊙ F`; off-diagonal entries are identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RisMatrix(pub DVector<Complex64>);

impl RisMatrix {
    pub fn diagonal(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&self.0)
    }

    /// `‖F'‖_F²`.
    pub fn frobenius_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }
}

pub fn effective_ris_matrix(ris: &RisConfig) -> RisMatrix {
    RisMatrix(DVector::from_iterator(
        ris.len(),
        ris.amp.iter().zip(&ris.phase).zip(&ris.sel).map(|((&a, &phi), &on)| {
            if on {
                Complex64::from_polar(a, phi)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }),
    ))
}

/// Common and private transmit beamformers.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSet {
    pub common: DVector<Complex64>,
    pub private: Vec<DVector<Complex64>>,
}

impl BeamformingSet {
    pub fn zeros(n_bs: usize, k: usize) -> Self {
        Self { common: DVector::zeros(n_bs), private: vec![DVector::zeros(n_bs); k] }
    }

    /// `Σ_k ‖w_k‖² + ‖w_c‖²`, the radiated power before amplifier losses.
    pub fn radiated_power(&self) -> f64 {
        self.common.norm_squared() + self.private.iter().map(|w| w.norm_squared()).sum::<f64>()
    }

    pub fn num_users(&self) -> usize {
        self.private.len()
    }

    pub fn n_bs(&self) -> usize {
        self.common.len()
    }
}

/// The effective BS→user channel `h_k` whose conjugate transpose is
/// `h_r,k^H F' G`.
pub fn effective_user_channel(
    h_r_k: &DVector<Complex64>,
    f_prime: &RisMatrix,
    g: &DMatrix<Complex64>,
) -> Result<DVector<Complex64>> {
    ensure!(
        h_r_k.len() == f_prime.0.len() && g.nrows() == h_r_k.len(),
        DimensionMismatch,
        "h_r has {} entries, F' has {}, G has {} rows",
        h_r_k.len(),
        f_prime.0.len(),
        g.nrows()
    );
    // h_k = G^H F'^H h_r
    let scaled = h_r_k.zip_map(&f_prime.0, |h, f| f.conj() * h);
    Ok(g.adjoint() * scaled)
}

/// `h_k^H w`.
pub fn project(h_k: &DVector<Complex64>, w: &DVector<Complex64>) -> Complex64 {
    h_k.dotc(w)
}

/// `‖h_r,k^H F'‖²`, the gain applied to the RIS's own amplifier noise.
pub fn amplified_noise_gain(h_r_k: &DVector<Complex64>, f_prime: &RisMatrix) -> f64 {
    h_r_k.iter().zip(f_prime.0.iter()).map(|(h, f)| h.norm_sqr() * f.norm_sqr()).sum()
}

/// Interpretation switches for the SINR expressions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SinrOptions {
    /// Drop user k's own private beam from its common-stream interference.
    pub common_sinr_excludes_self: bool,
}

/// Inputs shared by the SINR formulas for one user.
#[derive(Debug, Clone, Copy)]
pub struct UserLink<'a> {
    pub k: usize,
    pub h_k: &'a DVector<Complex64>,
    /// `‖h_r,k^H F'‖²`.
    pub noise_gain: f64,
    pub sigma_z2: f64,
    pub sigma_k2: f64,
}

impl UserLink<'_> {
    fn noise(&self) -> f64 {
        self.sigma_z2 * self.noise_gain + self.sigma_k2
    }
}

/// Common-stream SINR at user k; every private beam counts as interference
/// unless `common_sinr_excludes_self` is set.
pub fn sinr_common(link: &UserLink<'_>, bf: &BeamformingSet, opts: SinrOptions) -> f64 {
    let signal = project(link.h_k, &bf.common).norm_sqr();
    let interference: f64 = bf
        .private
        .iter()
        .enumerate()
        .filter(|(i, _)| !(opts.common_sinr_excludes_self && *i == link.k))
        .map(|(_, w)| project(link.h_k, w).norm_sqr())
        .sum();
    signal / (interference + link.noise())
}

/// Private-stream SINR at user k after the common stream is cancelled.
pub fn sinr_private(link: &UserLink<'_>, bf: &BeamformingSet) -> f64 {
    let signal = project(link.h_k, &bf.private[link.k]).norm_sqr();
    let interference: f64 =
        bf.private.iter().enumerate().filter(|(i, _)| *i != link.k).map(|(_, w)| project(link.h_k, w).norm_sqr()).sum();
    signal / (interference + link.noise())
}

/// Shannon rate `log2(1 + γ)` in bps/Hz.
pub fn rate(sinr: f64) -> Result<f64> {
    ensure!(sinr >= 0.0, InvalidArgument, "SINR must be non-negative, got {sinr}");
    Ok(sinr.ln_1p() / std::f64::consts::LN_2)
}

/// Whether `Σ C_k ≤ min_k R_c,k` holds.
pub fn common_rate_ok(c_alloc: &[f64], r_common: &[f64]) -> bool {
    let total: f64 = c_alloc.iter().sum();
    let min = r_common.iter().copied().fold(f64::INFINITY, f64::min);
    total <= min + COMMON_RATE_TOL
}

/// SINRs, rates and the common-rate split for one slot.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RateReport {
    pub sinr_common: Vec<f64>,
    pub sinr_private: Vec<f64>,
    pub r_common: Vec<f64>,
    pub r_private: Vec<f64>,
    pub c_alloc: Vec<f64>,
    pub r_total: f64,
}

pub fn total_rate(report: &RateReport) -> f64 {
    report.c_alloc.iter().zip(&report.r_private).map(|(c, r)| c + r).sum()
}

/// Computes every user's SINRs and rates. Passing `sigma_z2 = 0` removes the
/// RIS amplifier noise (passive surface).
pub fn compute_rates(
    ch: &ChannelRealization,
    f_prime: &RisMatrix,
    bf: &BeamformingSet,
    c_alloc: &[f64],
    sigma_z2: f64,
    sigma_k2: f64,
    opts: SinrOptions,
) -> Result<RateReport> {
    let k_users = ch.h_r.len();
    ensure!(
        bf.num_users() == k_users && c_alloc.len() == k_users,
        DimensionMismatch,
        "{k_users} users but {} private beams and {} common-rate shares",
        bf.num_users(),
        c_alloc.len()
    );
    ensure!(
        bf.n_bs() == ch.g.ncols() && bf.private.iter().all(|w| w.len() == ch.g.ncols()),
        DimensionMismatch,
        "beamformer length must equal N_BS = {}",
        ch.g.ncols()
    );
    ensure!(c_alloc.iter().all(|c| *c >= 0.0), InvalidArgument, "common-rate shares must be non-negative");
    let mut report = RateReport { c_alloc: c_alloc.to_vec(), ..RateReport::default() };
    for (k, h_r_k) in ch.h_r.iter().enumerate() {
        let h_k = effective_user_channel(h_r_k, f_prime, &ch.g)?;
        let link = UserLink { k, h_k: &h_k, noise_gain: amplified_noise_gain(h_r_k, f_prime), sigma_z2, sigma_k2 };
        let gc = sinr_common(&link, bf, opts);
        let gp = sinr_private(&link, bf);
        report.r_common.push(rate(gc)?);
        report.r_private.push(rate(gp)?);
        report.sinr_common.push(gc);
        report.sinr_private.push(gp);
    }
    report.r_total = total_rate(&report);
    Ok(report)
}
