//! Independent reference implementations used by the integration tests.
//!
//! Everything here is written from the formulas with plain loops and
//! scalar arithmetic, without calling the library code it checks.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;

/// Random `CN(0,1)`-ish entry; the distribution does not matter for oracle
/// comparisons.
pub fn rand_c<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// A raw instance: `g[m][n]`, `h_r[k][m]`, RIS diagonal `f[m]`, beams.
#[derive(Debug, Clone)]
pub struct RawInstance {
    pub g: Vec<Vec<Complex64>>,
    pub h_r: Vec<Vec<Complex64>>,
    pub f: Vec<Complex64>,
    pub amp: Vec<f64>,
    pub phase: Vec<f64>,
    pub sel: Vec<bool>,
    pub w_c: Vec<Complex64>,
    pub w: Vec<Vec<Complex64>>,
    pub c_alloc: Vec<f64>,
    pub sigma_z2: f64,
    pub sigma_k2: f64,
}

impl RawInstance {
    pub fn random<R: Rng>(k: usize, m: usize, n: usize, rng: &mut R) -> Self {
        let amp: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..10.0)).collect();
        let phase: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let sel: Vec<bool> = (0..m).map(|_| rng.random_bool(0.7)).collect();
        let f = (0..m)
            .map(|i| {
                if sel[i] {
                    Complex64::new(amp[i] * phase[i].cos(), amp[i] * phase[i].sin())
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self {
            g: (0..m).map(|_| (0..n).map(|_| rand_c(rng)).collect()).collect(),
            h_r: (0..k).map(|_| (0..m).map(|_| rand_c(rng)).collect()).collect(),
            f,
            amp,
            phase,
            sel,
            w_c: (0..n).map(|_| rand_c(rng)).collect(),
            w: (0..k).map(|_| (0..n).map(|_| rand_c(rng)).collect()).collect(),
            c_alloc: (0..k).map(|_| rng.random_range(0.0..2.0)).collect(),
            sigma_z2: rng.random_range(0.01..1.0),
            sigma_k2: rng.random_range(0.01..1.0),
        }
    }

    /// Row vector `h_r,k^H F' G`, entry `n`.
    pub fn h_row(&self, k: usize) -> Vec<Complex64> {
        let n_bs = self.g[0].len();
        (0..n_bs)
            .map(|n| {
                let mut s = Complex64::new(0.0, 0.0);
                for m in 0..self.f.len() {
                    s += self.h_r[k][m].conj() * self.f[m] * self.g[m][n];
                }
                s
            })
            .collect()
    }

    fn gain(row: &[Complex64], w: &[Complex64]) -> f64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (a, b) in row.iter().zip(w) {
            s += a * b;
        }
        s.norm_sqr()
    }

    fn noise(&self, k: usize) -> f64 {
        let mut amp_noise = 0.0;
        for m in 0..self.f.len() {
            amp_noise += (self.h_r[k][m].conj() * self.f[m]).norm_sqr();
        }
        self.sigma_z2 * amp_noise + self.sigma_k2
    }

    pub fn sinr_common(&self, k: usize) -> f64 {
        let row = self.h_row(k);
        let mut den = self.noise(k);
        for w in &self.w {
            den += Self::gain(&row, w);
        }
        Self::gain(&row, &self.w_c) / den
    }

    pub fn sinr_private(&self, k: usize) -> f64 {
        let row = self.h_row(k);
        let mut den = self.noise(k);
        for (i, w) in self.w.iter().enumerate() {
            if i != k {
                den += Self::gain(&row, w);
            }
        }
        Self::gain(&row, &self.w[k]) / den
    }

    pub fn r_total(&self) -> f64 {
        let mut t = 0.0;
        for k in 0..self.w.len() {
            t += self.c_alloc[k] + (1.0 + self.sinr_private(k)).log2();
        }
        t
    }

    /// `Σ‖F'G w‖² + σ_z² Σ|f_m|²`.
    pub fn ris_output(&self) -> f64 {
        let mut total = 0.0;
        let beams = self.w.iter().chain(std::iter::once(&self.w_c));
        for w in beams {
            for m in 0..self.f.len() {
                let mut s = Complex64::new(0.0, 0.0);
                for (n, wn) in w.iter().enumerate() {
                    s += self.g[m][n] * wn;
                }
                total += (self.f[m] * s).norm_sqr();
            }
        }
        for f in &self.f {
            total += self.sigma_z2 * f.norm_sqr();
        }
        total
    }
}

/// Rotary-wing propulsion power, one term at a time.
pub struct PropulsionOracle {
    pub blade: f64,
    pub parasite: f64,
    pub induced: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn propulsion_oracle(
    v: f64,
    p_b: f64,
    p_i: f64,
    omega: f64,
    r: f64,
    d0: f64,
    rho: f64,
    s: f64,
    a: f64,
    v0: f64,
) -> PropulsionOracle {
    let u_tip = omega * r;
    let blade = p_b * (1.0 + 3.0 * v * v / (u_tip * u_tip));
    let parasite = 0.5 * d0 * rho * s * a * v * v * v;
    let x = (1.0 + v.powi(4) / (4.0 * v0.powi(4))).sqrt();
    let y = v * v / (2.0 * v0 * v0);
    let induced = p_i * (x - y).sqrt();
    PropulsionOracle { blade, parasite, induced }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Straight-line forward pass: `w[l]` is `out × in` row-major, tanh on every
/// hidden layer.
pub fn mlp_forward(dims: &[usize], params: &[f64], x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    let mut off = 0;
    let layers = dims.len() - 1;
    for l in 0..layers {
        let (n_in, n_out) = (dims[l], dims[l + 1]);
        let w = &params[off..off + n_in * n_out];
        let b = &params[off + n_in * n_out..off + n_in * n_out + n_out];
        off += n_in * n_out + n_out;
        let mut z = vec![0.0; n_out];
        for o in 0..n_out {
            let mut acc = b[o];
            for i in 0..n_in {
                acc += w[o * n_in + i] * h[i];
            }
            z[o] = if l + 1 < layers { acc.tanh() } else { acc };
        }
        h = z;
    }
    h
}

/// Central finite differences of `f` at `x`.
pub fn finite_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative error with an absolute floor so near-zero gradients do not blow
/// up the ratio.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `erfc` with relative error below 1.2e-7 (Numerical Recipes `erfcc`).
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.265_512_23
            + t * (1.000_023_68
                + t * (0.374_091_96
                    + t * (0.096_784_18
                        + t * (-0.186_288_06
                            + t * (0.278_868_07
                                + t * (-1.135_203_98
                                    + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
            .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Sample mean and `n − 1` standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, var.sqrt())
}
