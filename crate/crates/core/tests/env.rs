use std::f64::consts::PI;

use aaris::env::{
    decode_action, reward, state_dim, user_mobility_step, ActionLayout, ConstraintFlags, Env, EnvConfig, JointAction,
    PhysicalAction, StepOutcome, TaskSpec,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_action<R: Rng>(layout: &ActionLayout, rng: &mut R, spread: f64) -> JointAction {
    JointAction {
        sel_mask: (0..layout.num_elements).map(|_| rng.random_bool(0.5)).collect(),
        raw_cont: (0..layout.dim()).map(|_| rng.random_range(-spread..spread)).collect(),
    }
}

fn start(cfg: &EnvConfig) -> (Env, TaskSpec) {
    let mut env = Env::new(cfg.clone()).unwrap();
    let task = TaskSpec::default_for(cfg);
    env.reset(&task).unwrap();
    (env, task)
}

/// Constraint flags re-derived from the step record and the decoded action.
fn oracle_flags(cfg: &EnvConfig, phys: &PhysicalAction, out: &StepOutcome, prev_v: [f64; 2]) -> [bool; 13] {
    let i = &out.info;
    let k = cfg.num_users;
    let share: f64 = phys.c_alloc.iter().sum();
    let min_rc = i.rates.r_common.iter().copied().fold(f64::INFINITY, f64::min);
    let mut w2 = phys.beams.common.norm_squared();
    for w in &phys.beams.private {
        w2 += w.norm_squared();
    }
    let speed = (phys.velocity[0].powi(2) + phys.velocity[1].powi(2)).sqrt();
    let dv = ((phys.velocity[0] - prev_v[0]).powi(2) + (phys.velocity[1] - prev_v[1]).powi(2)).sqrt();
    let mut inside = true;
    for a in 0..3 {
        inside &= cfg.q_min[a] <= i.proposed_pos[a] && i.proposed_pos[a] <= cfg.q_max[a];
    }
    [
        share <= min_rc + 1e-12,
        (0..k).all(|u| phys.c_alloc[u] + i.rates.r_private[u] >= cfg.qos[u]),
        w2 / cfg.bs_power.pa_eff <= cfg.bs_power.p_max,
        i.p_ris_out <= cfg.ris_power.amp_eff * cfg.ris_power.p_amp_budget,
        phys.ris.amp.iter().all(|a| *a >= 0.0 && *a <= cfg.a_max_ris),
        phys.ris.phase.iter().all(|p| *p >= 0.0 && *p <= 2.0 * PI),
        inside,
        true,
        true,
        speed <= cfg.v_max,
        dv <= cfg.a_max_uav * cfg.slot_dt + 1e-12,
        true,
        true,
    ]
}

#[test]
fn reference_state_dimension_is_373() {
    let cfg = EnvConfig::table_defaults();
    let d = 2 * 5 * 4 + 2 + 32 + 3;
    assert_eq!(ActionLayout::for_config(&cfg).dim(), d);
    assert_eq!(state_dim(&cfg), 9 + 1 + 6 + 6 + 1 + 160 + 96 + 16 + d + 1);
    assert_eq!(state_dim(&cfg), 373);
    let (env, _) = start(&cfg);
    assert_eq!(env.state().raw.len(), 373);
}

#[test]
fn reset_places_uav_at_init_and_repeats() {
    let cfg = EnvConfig::desk_scale();
    let (env_a, task) = start(&cfg);
    assert_eq!(env_a.uav_position(), cfg.uav_init);
    let s = env_a.state();
    assert_eq!(&s.raw[3 * 2 + 1..3 * 2 + 4], &cfg.uav_init);
    let mut env_b = Env::new(cfg).unwrap();
    assert_eq!(env_b.reset(&task).unwrap(), s);
}

#[test]
fn reset_rejects_users_outside_the_arena() {
    let cfg = EnvConfig::desk_scale();
    let mut env = Env::new(cfg.clone()).unwrap();
    let mut task = TaskSpec::default_for(&cfg);
    task.user_xy[0] = [-5.0, 10.0];
    assert!(env.reset(&task).is_err());
}

#[test]
fn midpoint_and_extreme_decoding() {
    let cfg = EnvConfig::desk_scale();
    let layout = ActionLayout::for_config(&cfg);
    let mid = decode_action(&JointAction::zeros(&layout), &cfg).unwrap();
    assert!(mid.ris.amp.iter().all(|a| (a - cfg.a_max_ris / 2.0).abs() < 1e-12));
    assert!(mid.ris.phase.iter().all(|p| (p - PI).abs() < 1e-12));
    assert_eq!(mid.velocity, [0.0, 0.0]);
    assert!(mid.c_alloc.iter().all(|c| (c - cfg.c_max / 2.0).abs() < 1e-12));

    let mut low = JointAction::zeros(&layout);
    low.raw_cont.iter_mut().for_each(|x| *x = -1.0);
    let lo = decode_action(&low, &cfg).unwrap();
    assert!(lo.ris.amp.iter().all(|a| *a == 0.0));
    assert!(lo.c_alloc.iter().all(|c| *c == 0.0));
    let vs = cfg.v_max / 2f64.sqrt();
    assert!((lo.velocity[0] + vs).abs() < 1e-12);

    let mut hi = JointAction::zeros(&layout);
    hi.raw_cont[layout.phase().start] = 1.0;
    let h = decode_action(&hi, &cfg).unwrap();
    assert!((h.ris.phase[0] - 2.0 * PI).abs() < 1e-12);

    // out of range inputs are clamped, not rejected
    let mut wild = JointAction::zeros(&layout);
    wild.raw_cont[layout.amp().start] = 7.0;
    assert!((decode_action(&wild, &cfg).unwrap().ris.amp[0] - cfg.a_max_ris).abs() < 1e-12);
}

#[test]
fn episode_runs_exactly_horizon_steps() {
    let mut cfg = EnvConfig::desk_scale();
    cfg.horizon = 7;
    let (mut env, _) = start(&cfg);
    let layout = ActionLayout::for_config(&cfg);
    for i in 0..7 {
        let out = env.step(&JointAction::zeros(&layout)).unwrap();
        assert_eq!(out.done, i == 6);
    }
    assert!(env.step(&JointAction::zeros(&layout)).is_err());
}

#[test]
fn hovering_satisfies_flight_constraints() {
    let cfg = EnvConfig::desk_scale();
    let (mut env, _) = start(&cfg);
    let out = env.step(&JointAction::zeros(&ActionLayout::for_config(&cfg))).unwrap();
    assert_eq!(out.info.uav_pos, cfg.uav_init);
    for c in [7, 10, 11] {
        assert!(out.info.flags.get(c), "C{c}");
    }
}

#[test]
fn overspeed_violates_c10_and_scales_reward() {
    let cfg = EnvConfig::desk_scale();
    let (mut env, _) = start(&cfg);
    let layout = ActionLayout::for_config(&cfg);
    let mut phys = decode_action(&JointAction::zeros(&layout), &cfg).unwrap();
    phys.velocity = [2.0 * cfg.v_max, 0.0];
    let out = env.step_physical(&phys).unwrap();
    assert!(!out.info.flags.get(10));
    assert_eq!(out.reward, reward(out.info.ee, &out.info.flags));
    assert!(out.info.flags.violations() >= 1);
}

#[test]
fn constraint_flags_match_scalar_recheck() {
    let cfg = EnvConfig::desk_scale();
    let layout = ActionLayout::for_config(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let (mut env, task) = start(&cfg);
    let mut prev_v = [0.0; 2];
    for _ in 0..500 {
        if env.is_done() {
            env.reset(&task).unwrap();
            prev_v = [0.0; 2];
        }
        let a = random_action(&layout, &mut rng, 1.0);
        let phys = decode_action(&a, &cfg).unwrap();
        let out = env.step(&a).unwrap();
        assert_eq!(out.info.flags.sat, oracle_flags(&cfg, &phys, &out, prev_v));
        prev_v = phys.velocity;
    }
}

#[test]
fn mobility_std_matches_configuration() {
    let mut cfg = EnvConfig::desk_scale();
    cfg.user_step_std = 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let n = 10_000;
    let mut d = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let mut p = [[75.0, 75.0]];
        user_mobility_step(&mut p, &mut rng, &cfg);
        d.push(p[0][0] - 75.0);
        d.push(p[0][1] - 75.0);
    }
    let var = d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64;
    let want = cfg.user_step_std * cfg.slot_dt;
    assert!((var.sqrt() / want - 1.0).abs() < 0.05);
}

#[test]
fn mobility_edge_cases() {
    let mut cfg = EnvConfig::desk_scale();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    cfg.user_step_std = 0.0;
    let mut p = [[10.0, 20.0]];
    user_mobility_step(&mut p, &mut rng, &cfg);
    assert_eq!(p, [[10.0, 20.0]]);
    cfg.user_step_std = 50.0;
    for _ in 0..1000 {
        let mut p = [[cfg.q_max[0], cfg.q_min[1]]];
        user_mobility_step(&mut p, &mut rng, &cfg);
        assert!((cfg.q_min[0]..=cfg.q_max[0]).contains(&p[0][0]));
        assert!((cfg.q_min[1]..=cfg.q_max[1]).contains(&p[0][1]));
    }
}

#[test]
fn trajectories_are_bit_identical_for_a_seed() {
    let run = || {
        let cfg = EnvConfig::desk_scale();
        let layout = ActionLayout::for_config(&cfg);
        let (mut env, _) = start(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        (0..cfg.horizon)
            .map(|_| {
                let o = env.step(&random_action(&layout, &mut rng, 1.0)).unwrap();
                (o.state.raw, o.reward.to_bits())
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn reward_examples() {
    let mut f = ConstraintFlags::default();
    assert_eq!(reward(2.0, &f), 2.0);
    for c in [2, 5, 9] {
        f.set(c, false);
    }
    assert_eq!(reward(2.0, &f), -4.0);
    let none = ConstraintFlags { sat: [false; 13] };
    assert_eq!(reward(2.0, &none), -24.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn every_step_respects_the_invariants(seed in 0u64..10_000, spread in 0.5f64..3.0) {
        let mut cfg = EnvConfig::desk_scale();
        cfg.horizon = 20;
        cfg.seed = seed;
        let layout = ActionLayout::for_config(&cfg);
        let (mut env, _) = start(&cfg);
        let dim = env.state_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..cfg.horizon {
            let out = env.step(&random_action(&layout, &mut rng, spread)).unwrap();
            for a in 0..3 {
                prop_assert!(cfg.q_min[a] <= out.info.uav_pos[a] && out.info.uav_pos[a] <= cfg.q_max[a]);
            }
            prop_assert_eq!(out.state.raw.len(), dim);
            prop_assert!(out.info.rates.r_total >= 0.0 && out.info.p_total > 0.0);
            let f = &out.info.flags;
            prop_assert!(f.get(8) && f.get(9) && f.get(12) && f.get(13));
            prop_assert_eq!(out.reward, out.info.ee * (1.0 - f.violations() as f64));
            if f.all_satisfied() {
                prop_assert_eq!(out.reward, out.info.ee);
            }
        }
    }
}
