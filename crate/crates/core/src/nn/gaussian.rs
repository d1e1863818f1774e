use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::Matrix;

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Guard inside `log(1 − tanh² z + δ)`.
pub const TANH_EPS: f64 = 1e-6;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Diagonal Gaussian policy head: the first half of each actor output row is
/// the mean, the second half the (clamped) log standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianHead {
    pub mean: Matrix,
    pub log_std: Matrix,
    /// Whether each raw log-std lay inside the clamp (gradient passes).
    pub log_std_active: Vec<bool>,
}

impl GaussianHead {
    pub fn from_actor_output(out: &Matrix) -> Self {
        let a = out.cols() / 2;
        let mean = out.columns(0, a);
        let mut log_std = out.columns(a, 2 * a);
        let log_std_active = log_std.as_slice().iter().map(|v| (LOG_STD_MIN..=LOG_STD_MAX).contains(v)).collect();
        log_std.map_inplace(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX));
        Self { mean, log_std, log_std_active }
    }

    pub fn action_dim(&self) -> usize {
        self.mean.cols()
    }

    pub fn batch(&self) -> usize {
        self.mean.rows()
    }
}

/// A reparameterised draw `a = tanh(μ + ε⊙σ)` with its log density.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSample {
    pub noise: Matrix,
    pub pre_squash: Matrix,
    pub action: Matrix,
    /// Per-row log-probability.
    pub log_prob: Vec<f64>,
    pub tanh_correction: bool,
}

/// Draws one sample per row with fresh standard-normal noise.
pub fn sample_reparameterized<R: Rng + ?Sized>(
    head: &GaussianHead,
    tanh_correction: bool,
    rng: &mut R,
) -> GaussianSample {
    let (b, a) = head.mean.shape();
    let mut noise = Matrix::zeros(b, a);
    noise.as_mut_slice().iter_mut().for_each(|e| *e = rng.sample(StandardNormal));
    sample_with_noise(head, noise, tanh_correction)
}

/// Same as [`sample_reparameterized`] with caller-supplied noise.
pub fn sample_with_noise(head: &GaussianHead, noise: Matrix, tanh_correction: bool) -> GaussianSample {
    let (b, a) = head.mean.shape();
    let mut pre = Matrix::zeros(b, a);
    let mut act = Matrix::zeros(b, a);
    let mut log_prob = vec![0.0; b];
    for r in 0..b {
        let mut lp = 0.0;
        for c in 0..a {
            let eps = noise.get(r, c);
            let ls = head.log_std.get(r, c);
            let z = head.mean.get(r, c) + eps * ls.exp();
            let t = z.tanh();
            pre.set(r, c, z);
            act.set(r, c, t);
            lp += -0.5 * eps * eps - ls - HALF_LN_2PI;
            if tanh_correction {
                lp -= (1.0 - t * t + TANH_EPS).ln();
            }
        }
        log_prob[r] = lp;
    }
    GaussianSample { noise, pre_squash: pre, action: act, log_prob, tanh_correction }
}

/// Back-propagates `dL/da` (per element) and `dL/dlogπ` (per row) through
/// a sample to the raw actor output (mean columns then log-std columns).
pub fn backprop_sample(head: &GaussianHead, sample: &GaussianSample, d_action: &Matrix, d_log_prob: &[f64]) -> Matrix {
    let (b, a) = head.mean.shape();
    let mut grad = Matrix::zeros(b, 2 * a);
    for r in 0..b {
        for c in 0..a {
            let t = sample.action.get(r, c);
            let eps = sample.noise.get(r, c);
            let sigma = head.log_std.get(r, c).exp();
            let dtanh = 1.0 - t * t;
            // d/dz of −log(1 − tanh² z + δ)
            let dcorr = if sample.tanh_correction { 2.0 * t * dtanh / (dtanh + TANH_EPS) } else { 0.0 };
            let da = d_action.get(r, c);
            let dlp = d_log_prob[r];
            let dz = da * dtanh + dlp * dcorr;
            let d_mean = dz;
            let d_log_std = if head.log_std_active[r * a + c] { dz * eps * sigma - dlp } else { 0.0 };
            grad.set(r, c, d_mean);
            grad.set(r, a + c, d_log_std);
        }
    }
    grad
}
