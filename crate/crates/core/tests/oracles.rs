//! Library results against the scalar reference code in `common`.

mod common;

use aaris::channel::ChannelRealization;
use aaris::env::{reward, ConstraintFlags, EnvConfig, NUM_CONSTRAINTS};
use aaris::harness::{complexity_estimate, ComplexityInputs};
use aaris::power::{hover_power, propulsion_power, propulsion_terms, ris_output_power, ris_power, UavPowerParams};
use aaris::rsma::{compute_rates, effective_ris_matrix, BeamformingSet, RisConfig, SinrOptions};
use aaris::units::dbm_to_watts;
use common::{dbm_to_mw, propulsion_oracle, RawInstance};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn to_library(raw: &RawInstance) -> (ChannelRealization, RisConfig, BeamformingSet) {
    let m = raw.g.len();
    let n = raw.g[0].len();
    let ch = ChannelRealization {
        g: DMatrix::from_fn(m, n, |i, j| raw.g[i][j]),
        h_r: raw.h_r.iter().map(|h| DVector::from_vec(h.clone())).collect(),
    };
    let ris = RisConfig::new(raw.amp.clone(), raw.phase.clone(), raw.sel.clone()).unwrap();
    let bf = BeamformingSet {
        common: DVector::from_vec(raw.w_c.clone()),
        private: raw.w.iter().map(|w| DVector::from_vec(w.clone())).collect(),
    };
    (ch, ris, bf)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn sinr_and_rates_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let k = rng.random_range(1..=3);
        let m = rng.random_range(1..=4);
        let n = rng.random_range(1..=3);
        let raw = RawInstance::random(k, m, n, &mut rng);
        let (ch, ris, bf) = to_library(&raw);
        let f = effective_ris_matrix(&ris);
        let rep =
            compute_rates(&ch, &f, &bf, &raw.c_alloc, raw.sigma_z2, raw.sigma_k2, SinrOptions::default()).unwrap();
        for u in 0..k {
            assert!(close(rep.sinr_common[u], raw.sinr_common(u), 1e-12));
            assert!(close(rep.sinr_private[u], raw.sinr_private(u), 1e-12));
        }
        assert!(close(rep.r_total, raw.r_total(), 1e-12));
    }
}

#[test]
fn ris_output_power_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let raw =
            RawInstance::random(rng.random_range(1..=3), rng.random_range(1..=4), rng.random_range(1..=3), &mut rng);
        let (ch, ris, bf) = to_library(&raw);
        let p = ris_output_power(&effective_ris_matrix(&ris), &ch.g, &bf, raw.sigma_z2).unwrap();
        assert!(close(p, raw.ris_output(), 1e-12));
    }
}

#[test]
fn hover_power_is_table_sum() {
    let p = UavPowerParams::default();
    assert!((propulsion_power(0.0, &p).unwrap() - 168.48).abs() <= 1e-9);
    assert_eq!(hover_power(&p), propulsion_power(0.0, &p).unwrap());
}

#[test]
fn propulsion_at_ten_metres_per_second() {
    let p = UavPowerParams::default();
    let o = propulsion_oracle(
        10.0,
        p.p_b,
        p.p_i,
        p.omega,
        p.rotor_r,
        p.d_ratio,
        p.air_density,
        p.solidity,
        p.disk_area,
        p.v_induced,
    );
    let t = propulsion_terms(10.0, &p).unwrap();
    let want = o.blade + o.parasite + o.induced;
    let got = propulsion_power(10.0, &p).unwrap();
    assert!((got - want).abs() / want <= 1e-12, "{got} vs {want}");
    assert!((t.blade - 81.51).abs() < 0.01);
    assert!((t.parasite - 4.62).abs() < 0.01);
    assert!((t.induced - 35.25).abs() < 0.05);
    assert!((got - 121.4).abs() < 0.05);
}

#[test]
fn propulsion_is_real_and_continuous_up_to_thirty() {
    let p = UavPowerParams::default();
    let mut prev = propulsion_power(0.0, &p).unwrap();
    for i in 1..=3000 {
        let v = i as f64 * 0.01;
        let o = propulsion_oracle(
            v,
            p.p_b,
            p.p_i,
            p.omega,
            p.rotor_r,
            p.d_ratio,
            p.air_density,
            p.solidity,
            p.disk_area,
            p.v_induced,
        );
        assert!(o.induced.is_finite(), "induced term at {v}");
        let now = propulsion_power(v, &p).unwrap();
        assert!((now - prev).abs() < 0.5, "jump at {v}");
        prev = now;
    }
}

#[test]
fn propulsion_is_parasite_dominated_at_high_speed() {
    let t = propulsion_terms(1e3, &UavPowerParams::default()).unwrap();
    assert!(t.induced < 1.0);
    assert!(t.parasite > t.blade && t.parasite > t.induced);
}

#[test]
fn static_ris_power_from_dbm_table_values() {
    let cfg = EnvConfig::table_defaults();
    let ris = RisConfig::unity(16);
    let p = ris_power(&ris, 0.0, &cfg.ris_power).unwrap();
    let want_mw = 16.0 * (dbm_to_mw(-10.0) + dbm_to_mw(-5.0));
    assert!((p * 1e3 - want_mw).abs() < 1e-12);
    assert!((p * 1e3 - 6.66).abs() < 0.01);
}

#[test]
fn dbm_conversion_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let dbm = rng.random_range(-100.0..50.0);
        let w = dbm_to_watts(dbm);
        assert!((w * 1e3 - dbm_to_mw(dbm)).abs() <= 1e-12 * dbm_to_mw(dbm));
    }
}

#[test]
fn reward_law_over_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..1000 {
        let ee: f64 = rng.random_range(-10.0..10.0) * 10f64.powi(rng.random_range(-8..3));
        let mut flags = ConstraintFlags::default();
        let mut n = 0;
        for i in 1..=NUM_CONSTRAINTS {
            if rng.random_bool(0.3) {
                flags.set(i, false);
                n += 1;
            }
        }
        assert_eq!(reward(ee, &flags), ee * (1.0 - n as f64));
    }
}

#[test]
fn complexity_products_over_random_configs() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..10 {
        let layers: Vec<u128> = (0..rng.random_range(2..6)).map(|_| rng.random_range(1..512)).collect();
        let weights: u128 = layers.windows(2).map(|w| w[0] * w[1]).sum();
        let c = ComplexityInputs {
            weights,
            batch: rng.random_range(1..1024),
            e_trn: rng.random_range(1..5000),
            e_adp: rng.random_range(1..5000),
            horizon: rng.random_range(1..1000),
            tasks: rng.random_range(1..20),
        };
        let e = complexity_estimate(&c);
        let mut trn = 1u128;
        for f in [c.weights, c.batch, c.e_trn, c.horizon, c.tasks] {
            trn *= f;
        }
        let mut adp = 1u128;
        for f in [c.weights, c.batch, c.e_adp, c.horizon] {
            adp *= f;
        }
        assert_eq!(e.meta_training_cost, trn);
        assert_eq!(e.meta_adaptation_cost, adp);
    }
}
