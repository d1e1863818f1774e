//! Geometry-dependent Rician channels between the base station, the aerial
//! RIS and the ground users.
//!
//! The BS→RIS channel `G` is an `M × N_BS` matrix whose line-of-sight part is
//! the outer product of a planar-array arrival vector and a linear-array
//! departure vector. Each RIS→user channel `h_r,k` is a length-`M` vector whose
//! line-of-sight part is a planar-array vector with the opposite phase sign.
//! Both channels are redrawn independently every slot (block fading) and the
//! direct BS→user link is blocked.

use log::warn;
use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Horizontal separations below this many metres are treated as coincident.
pub const DEGENERATE_DISTANCE_M: f64 = 1e-9;

/// Positions and velocity of the network nodes during one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGeometry {
    pub bs_pos: Vector3<f64>,
    pub uav_pos: Vector3<f64>,
    pub uav_vel: Vector3<f64>,
    pub user_pos: Vec<Vector3<f64>>,
}

impl NetworkGeometry {
    /// Builds a geometry with the UAV at `altitude`, zero vertical velocity
    /// and every user on the ground plane.
    pub fn new(bs_pos: Vector3<f64>, uav_xy: [f64; 2], altitude: f64, vel_xy: [f64; 2], users_xy: &[[f64; 2]]) -> Self {
        Self {
            bs_pos,
            uav_pos: Vector3::new(uav_xy[0], uav_xy[1], altitude),
            uav_vel: Vector3::new(vel_xy[0], vel_xy[1], 0.0),
            user_pos: users_xy.iter().map(|p| Vector3::new(p[0], p[1], 0.0)).collect(),
        }
    }

    pub fn num_users(&self) -> usize {
        self.user_pos.len()
    }

    pub fn bs_uav_distance(&self) -> f64 {
        (self.bs_pos - self.uav_pos).norm()
    }

    pub fn uav_user_distance(&self, k: usize) -> f64 {
        (self.uav_pos - self.user_pos[k]).norm()
    }
}

/// Large-scale and array parameters of both hops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Linear path gain at the reference distance.
    pub c0: f64,
    /// Reference distance in metres.
    pub d0: f64,
    pub alpha_bs_u: f64,
    pub alpha_u_k: f64,
    /// Linear Rician factors; `f64::INFINITY` gives pure line of sight.
    pub k_bs_u: f64,
    pub k_u_k: f64,
    /// Steering constant `2π f_c d_RIS / c`.
    pub zeta_phase: f64,
    pub mx: usize,
    pub my: usize,
    pub n_bs: usize,
    /// Use the cos β expression with the y-difference numerator exactly as
    /// printed instead of the geometric x-difference form.
    pub use_printed_cos_beta: bool,
}

impl ChannelParams {
    pub fn num_elements(&self) -> usize {
        self.mx * self.my
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.c0 > 0.0, InvalidArgument, "c0 must be positive, got {}", self.c0);
        ensure!(self.d0 > 0.0, InvalidArgument, "d0 must be positive, got {}", self.d0);
        ensure!(
            self.alpha_bs_u >= 0.0 && self.alpha_u_k >= 0.0,
            InvalidArgument,
            "path-loss exponents must be non-negative"
        );
        ensure!(self.k_bs_u >= 0.0 && self.k_u_k >= 0.0, InvalidArgument, "Rician factors must be non-negative");
        ensure!(self.mx >= 1 && self.my >= 1, InvalidArgument, "RIS needs at least one element per axis");
        ensure!(self.n_bs >= 1, InvalidArgument, "BS needs at least one antenna");
        Ok(())
    }
}

/// One slot's small-scale channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// BS→RIS channel, `M × N_BS`.
    pub g: DMatrix<Complex64>,
    /// RIS→user channels, one length-`M` vector per user.
    pub h_r: Vec<DVector<Complex64>>,
}

impl ChannelRealization {
    /// Draws both hops for every user.
    pub fn draw<R: Rng + ?Sized>(geom: &NetworkGeometry, params: &ChannelParams, rng: &mut R) -> Result<Self> {
        let g = draw_bs_uav_channel(geom, params, rng)?;
        let h_r =
            (0..geom.num_users()).map(|k| draw_uav_user_channel(geom, params, k, rng)).collect::<Result<Vec<_>>>()?;
        Ok(Self { g, h_r })
    }

    pub fn is_finite(&self) -> bool {
        self.g.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self.h_r.iter().flat_map(|h| h.iter()).all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

fn phase_progression(n: usize, phase_arg: f64) -> impl Iterator<Item = Complex64> {
    (0..n).map(move |i| Complex64::from_polar(1.0, -phase_arg * i as f64))
}

/// Uniform linear array response `[1, e^{-jφ}, …, e^{-jφ(n-1)}]`.
pub fn ula_steering(n: usize, phase_arg: f64) -> Result<DVector<Complex64>> {
    ensure!(n >= 1, InvalidArgument, "array needs at least one element");
    Ok(DVector::from_iterator(n, phase_progression(n, phase_arg)))
}

/// Uniform planar array response: the Kronecker product of the x-axis and
/// y-axis linear responses, so entry `i·my + j` equals `e^{-jφi}·e^{-jφj}`.
pub fn upa_steering(mx: usize, my: usize, phase_arg: f64) -> Result<DVector<Complex64>> {
    ensure!(mx >= 1 && my >= 1, InvalidArgument, "planar array needs at least one element per axis (got {mx}×{my})");
    let ax = ula_steering(mx, phase_arg)?;
    let ay = ula_steering(my, phase_arg)?;
    Ok(ax.kronecker(&ay))
}

fn ratio_pair(num_a: f64, num_b: f64, denom: f64, what: &str) -> (f64, f64) {
    if denom < DEGENERATE_DISTANCE_M {
        warn!("degenerate {what} geometry (horizontal separation {denom:.3e} m); using angles (0, 1)");
        (0.0, 1.0)
    } else {
        (num_a / denom, num_b / denom)
    }
}

/// `(sin θ, cos η)` between the BS and the RIS, computed from the UAV's
/// absolute horizontal coordinates.
pub fn bs_uav_angles(geom: &NetworkGeometry) -> (f64, f64) {
    let (x, y) = (geom.uav_pos.x, geom.uav_pos.y);
    let r = x.hypot(y);
    ratio_pair(y, x, r, "BS-UAV")
}

/// `(sin α, cos β)` between the RIS and user `k`.
pub fn uav_user_angles(geom: &NetworkGeometry, k: usize, params: &ChannelParams) -> (f64, f64) {
    let user = geom.user_pos[k];
    let dx = user.x - geom.uav_pos.x;
    let dy = user.y - geom.uav_pos.y;
    let dz = user.z - geom.uav_pos.z;
    let horiz = dx.hypot(dy);
    if horiz < DEGENERATE_DISTANCE_M {
        warn!("user {k} is horizontally coincident with the UAV; using angles (0, 1)");
        return (0.0, 1.0);
    }
    let sin_alpha = dy / dz.hypot(dy);
    let cos_beta = if params.use_printed_cos_beta { dy / horiz } else { dx / horiz };
    (sin_alpha, cos_beta)
}

/// Distance-dependent gain `C0 (d / D0)^{-α}`.
pub fn path_gain(distance: f64, alpha: f64, params: &ChannelParams) -> Result<f64> {
    ensure!(distance > 0.0, InvalidArgument, "distance must be positive, got {distance}");
    Ok(params.c0 * (distance / params.d0).powf(-alpha))
}

/// LoS and NLoS amplitude weights for Rician factor `k`.
fn rician_weights(k: f64) -> (f64, f64) {
    if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    }
}

/// Circularly-symmetric standard complex Gaussian, `CN(0, 1)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn draw_bs_uav_channel<R: Rng + ?Sized>(
    geom: &NetworkGeometry,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<DMatrix<Complex64>> {
    params.validate()?;
    let m = params.num_elements();
    let n = params.n_bs;
    let (sin_theta, cos_eta) = bs_uav_angles(geom);
    let phase = params.zeta_phase * sin_theta * cos_eta;
    let aoa = upa_steering(params.mx, params.my, phase)?;
    let aod = ula_steering(n, phase)?;
    let los = &aoa * aod.transpose();

    let gain = path_gain(geom.bs_uav_distance(), params.alpha_bs_u, params)?.sqrt();
    let (w_los, w_nlos) = rician_weights(params.k_bs_u);
    // Column-major fill keeps the draw order stable for a given seed.
    let nlos = DMatrix::from_fn(m, n, |_, _| complex_gaussian(rng));
    Ok((los * Complex64::from(w_los) + nlos * Complex64::from(w_nlos)) * Complex64::from(gain))
}

pub fn draw_uav_user_channel<R: Rng + ?Sized>(
    geom: &NetworkGeometry,
    params: &ChannelParams,
    k: usize,
    rng: &mut R,
) -> Result<DVector<Complex64>> {
    params.validate()?;
    if k >= geom.num_users() {
        return Err(Error::InvalidArgument(format!("user index {k} out of range for {} users", geom.num_users())));
    }
    let (sin_alpha, cos_beta) = uav_user_angles(geom, k, params);
    // Departure from the RIS carries +j phase progression.
    let los = upa_steering(params.mx, params.my, -params.zeta_phase * sin_alpha * cos_beta)?;
    let gain = path_gain(geom.uav_user_distance(k), params.alpha_u_k, params)?.sqrt();
    let (w_los, w_nlos) = rician_weights(params.k_u_k);
    let nlos = DVector::from_fn(params.num_elements(), |_, _| complex_gaussian(rng));
    Ok((los * Complex64::from(w_los) + nlos * Complex64::from(w_nlos)) * Complex64::from(gain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn params(mx: usize, my: usize, n_bs: usize, k: f64) -> ChannelParams {
        ChannelParams {
            c0: 0.001,
            d0: 1.0,
            alpha_bs_u: 3.0,
            alpha_u_k: 3.0,
            k_bs_u: k,
            k_u_k: k,
            zeta_phase: PI,
            mx,
            my,
            n_bs,
            use_printed_cos_beta: false,
        }
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn steering_examples() {
        assert_eq!(upa_steering(1, 1, 0.7).unwrap().as_slice(), &[Complex64::new(1.0, 0.0)]);
        assert!(upa_steering(2, 2, 0.0).unwrap().iter().all(|z| close(*z, Complex64::new(1.0, 0.0))));
        let v = upa_steering(2, 2, PI).unwrap();
        let want = [1.0, -1.0, -1.0, 1.0];
        for (z, w) in v.iter().zip(want) {
            assert!(close(*z, Complex64::new(w, 0.0)), "{z} vs {w}");
        }
        let u = ula_steering(3, 0.0).unwrap();
        assert!(u.iter().all(|z| close(*z, Complex64::new(1.0, 0.0))));
        let u = ula_steering(2, PI / 2.0).unwrap();
        assert!(close(u[1], Complex64::new(0.0, -1.0)));
        assert!(ula_steering(0, 1.0).is_err());
        assert!(upa_steering(0, 3, 1.0).is_err());
        assert!(upa_steering(3, 0, 1.0).is_err());
    }

    #[test]
    fn angle_examples() {
        let bs = Vector3::new(0.0, 0.0, 10.0);
        let g = NetworkGeometry::new(bs, [3.0, 4.0], 100.0, [0.0, 0.0], &[]);
        let (s, c) = bs_uav_angles(&g);
        assert!((s - 0.8).abs() < 1e-15 && (c - 0.6).abs() < 1e-15);
        let g = NetworkGeometry::new(bs, [5.0, 0.0], 100.0, [0.0, 0.0], &[]);
        assert_eq!(bs_uav_angles(&g), (0.0, 1.0));
        let g = NetworkGeometry::new(bs, [1.0, 1.0], 100.0, [0.0, 0.0], &[]);
        let (s, c) = bs_uav_angles(&g);
        assert!((s - FRAC_1_SQRT_2).abs() < 1e-15 && (c - FRAC_1_SQRT_2).abs() < 1e-15);
        let g = NetworkGeometry::new(bs, [0.0, 0.0], 100.0, [0.0, 0.0], &[]);
        assert_eq!(bs_uav_angles(&g), (0.0, 1.0));
    }

    #[test]
    fn user_angle_examples() {
        let p = params(2, 2, 1, 1.0);
        let bs = Vector3::new(0.0, 0.0, 10.0);
        let h = 100.0;
        let g = NetworkGeometry::new(bs, [20.0, 30.0], h, [0.0, 0.0], &[[23.0, 34.0]]);
        let (s, c) = uav_user_angles(&g, 0, &p);
        assert!((s - 4.0 / (h * h + 16.0).sqrt()).abs() < 1e-15);
        assert!((c - 0.6).abs() < 1e-15);

        let g = NetworkGeometry::new(bs, [20.0, 30.0], h, [0.0, 0.0], &[[25.0, 30.0], [20.0, 40.0]]);
        let (s, c) = uav_user_angles(&g, 0, &p);
        assert_eq!((s, c), (0.0, 1.0));
        let (_, c) = uav_user_angles(&g, 1, &p);
        assert_eq!(c, 0.0);

        let mut printed = p.clone();
        printed.use_printed_cos_beta = true;
        let g = NetworkGeometry::new(bs, [20.0, 30.0], h, [0.0, 0.0], &[[23.0, 34.0]]);
        let (_, c) = uav_user_angles(&g, 0, &printed);
        assert!((c - 0.8).abs() < 1e-15);

        let g = NetworkGeometry::new(bs, [20.0, 30.0], h, [0.0, 0.0], &[[20.0, 30.0]]);
        assert_eq!(uav_user_angles(&g, 0, &p), (0.0, 1.0));
    }

    #[test]
    fn path_gain_examples() {
        let p = params(1, 1, 1, 1.0);
        assert!((path_gain(1.0, 3.0, &p).unwrap() - 0.001).abs() < 1e-18);
        assert!((path_gain(10.0, 3.0, &p).unwrap() - 1e-6).abs() < 1e-18);
        assert_eq!(path_gain(2.0, 0.0, &p).unwrap(), 0.001);
        assert!(path_gain(0.0, 3.0, &p).is_err());
        assert!(path_gain(-1.0, 3.0, &p).is_err());
        assert!(path_gain(5.0, 3.0, &p).unwrap() > path_gain(6.0, 3.0, &p).unwrap());
    }

    #[test]
    fn pure_los_scalar_channels() {
        let p = params(1, 1, 1, f64::INFINITY);
        // UAV exactly one reference distance above the BS and the user.
        let bs = Vector3::new(0.0, 0.0, 99.0);
        let g = NetworkGeometry::new(bs, [0.0, 0.0], 100.0, [0.0, 0.0], &[[0.0, 0.0]]);
        let mut g = g;
        g.user_pos[0].z = 99.0;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gm = draw_bs_uav_channel(&g, &p, &mut rng).unwrap();
        assert!(close(gm[(0, 0)], Complex64::new(0.001f64.sqrt(), 0.0)));
        let h = draw_uav_user_channel(&g, &p, 0, &mut rng).unwrap();
        assert!(close(h[0], Complex64::new(0.001f64.sqrt(), 0.0)));
    }

    #[test]
    fn shapes_and_finiteness() {
        let p = params(3, 2, 4, 2.0);
        let bs = Vector3::new(0.0, 0.0, 10.0);
        let g = NetworkGeometry::new(bs, [40.0, 70.0], 100.0, [1.0, 0.0], &[[10.0, 10.0], [140.0, 3.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ch = ChannelRealization::draw(&g, &p, &mut rng).unwrap();
        assert_eq!(ch.g.shape(), (6, 4));
        assert_eq!(ch.h_r.len(), 2);
        assert!(ch.h_r.iter().all(|h| h.len() == 6));
        assert!(ch.is_finite());
        assert!(draw_uav_user_channel(&g, &p, 2, &mut rng).is_err());
    }

    #[test]
    fn user_los_is_conjugate_of_arrival_form() {
        let a = upa_steering(3, 2, 0.37).unwrap();
        let b = upa_steering(3, 2, -0.37).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!(close(x.conj(), *y));
        }
    }

    #[test]
    fn seed_fixes_realization() {
        let p = params(2, 2, 2, 2.0);
        let bs = Vector3::new(0.0, 0.0, 10.0);
        let g = NetworkGeometry::new(bs, [40.0, 70.0], 100.0, [0.0, 0.0], &[[10.0, 10.0]]);
        let a = ChannelRealization::draw(&g, &p, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = ChannelRealization::draw(&g, &p, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }
}
