mod common;

use aaris::nn::checkpoint::{mlp_from_bytes, mlp_to_bytes};
use aaris::nn::{
    param_count, sample_reparameterized, sample_with_noise, soft_update, GaussianHead, Matrix, Mlp, Optimizer,
};
use common::{finite_diff, mlp_forward, rel_err};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dims<R: Rng>(rng: &mut R) -> Vec<usize> {
    let layers = rng.random_range(1..=3);
    (0..=layers).map(|_| rng.random_range(1..=16)).collect()
}

/// Scalar loss `Σ_i c_i y_i + ½ Σ_i y_i²` over a batch.
fn loss(net: &Mlp, x: &Matrix, c: &[f64]) -> f64 {
    let y = net.forward(x).unwrap();
    y.as_slice()
        .chunks(net.output_dim())
        .map(|row| row.iter().zip(c).map(|(v, ci)| ci * v + 0.5 * v * v).sum::<f64>())
        .sum()
}

#[test]
fn backward_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let dims = random_dims(&mut rng);
        let net = Mlp::new(&dims, &mut rng).unwrap();
        let batch = rng.random_range(1..4);
        let x = Matrix::from_vec(batch, dims[0], (0..batch * dims[0]).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap();
        let c: Vec<f64> = (0..net.output_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();

        let (y, tape) = net.forward_tape(&x).unwrap();
        let mut g = y.clone();
        for row in g.as_mut_slice().chunks_mut(net.output_dim()) {
            row.iter_mut().zip(&c).for_each(|(v, ci)| *v += ci);
        }
        let (analytic, _) = net.backward(&tape, &g).unwrap();
        let numeric = finite_diff(|p| loss(&Mlp::from_params(&dims, p.to_vec()).unwrap(), &x, &c), net.params(), 1e-5);
        for (a, n) in analytic.iter().zip(&numeric) {
            worst = worst.max(rel_err(*a, *n));
        }
    }
    assert!(worst < 1e-4, "max relative error {worst}");
}

#[test]
fn input_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let dims = [5, 7, 3];
    let net = Mlp::new(&dims, &mut rng).unwrap();
    let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (_, tape) = net.forward_tape(&Matrix::row_vector(&x)).unwrap();
    let (_, gx) = net.backward(&tape, &Matrix::row_vector(&[1.0, 1.0, 1.0])).unwrap();
    let numeric = finite_diff(|v| net.forward_one(v).unwrap().iter().sum(), &x, 1e-5);
    for (a, n) in gx.as_slice().iter().zip(&numeric) {
        assert!(rel_err(*a, *n) < 1e-6);
    }
}

#[test]
fn forward_matches_straight_line_reimplementation() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..50 {
        let dims = random_dims(&mut rng);
        let net = Mlp::new(&dims, &mut rng).unwrap();
        let x: Vec<f64> = (0..dims[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
        let got = net.forward_one(&x).unwrap();
        let want = mlp_forward(&dims, net.params(), &x);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}

#[test]
fn trivial_networks() {
    let zero = Mlp::zeros(&[3, 4, 2]).unwrap();
    assert_eq!(zero.forward_one(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    let id = Mlp::from_params(&[1, 1], vec![1.0, 0.0]).unwrap();
    assert_eq!(id.forward_one(&[0.37]).unwrap(), vec![0.37]);

    // y = w x, loss = y: dL/dw = x
    let net = Mlp::from_params(&[1, 1], vec![2.0, 0.0]).unwrap();
    let (_, tape) = net.forward_tape(&Matrix::row_vector(&[3.0])).unwrap();
    let (g, _) = net.backward(&tape, &Matrix::row_vector(&[1.0])).unwrap();
    assert_eq!(g, vec![3.0, 1.0]);
    let (g0, _) = net.backward(&tape, &Matrix::row_vector(&[0.0])).unwrap();
    assert_eq!(g0, vec![0.0, 0.0]);
}

#[test]
fn adam_first_step_is_lr_times_sign() {
    let lr = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let g: Vec<f64> = (0..50).map(|_| rng.random_range(-5.0..5.0)).collect();
    let mut p = vec![0.0; 50];
    let mut opt = Optimizer::adam(lr, 50);
    opt.step(&mut p, &g).unwrap();
    for (pi, gi) in p.iter().zip(&g) {
        // first bias-corrected step is lr · g / (|g| + eps)
        let want = -lr * gi / (gi.abs() + 1e-8);
        assert!((pi - want).abs() < 1e-15);
        assert!((pi + lr * gi.signum()).abs() < 1e-9);
    }
}

#[test]
fn adam_zero_gradient_is_a_no_op() {
    let mut p = vec![0.5, -1.0, 2.0];
    let mut opt = Optimizer::adam(1e-2, 3);
    for _ in 0..5 {
        opt.step(&mut p, &[0.0; 3]).unwrap();
    }
    assert_eq!(p, vec![0.5, -1.0, 2.0]);
}

#[test]
fn adam_trajectories_repeat() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let mut p = vec![1.0; 8];
        let mut opt = Optimizer::adam(1e-2, 8);
        for _ in 0..20 {
            let g: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            opt.step(&mut p, &g).unwrap();
        }
        p
    };
    assert_eq!(run(), run());
}

#[test]
fn gaussian_sample_mean_matches_head_mean() {
    let out = Matrix::from_rows(&[[0.3, -1.2, (0.5f64).ln(), (2.0f64).ln()]]).unwrap();
    let head = GaussianHead::from_actor_output(&out);
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let n = 100_000;
    let mut sums = [0.0; 2];
    for _ in 0..n {
        let s = sample_reparameterized(&head, true, &mut rng);
        for (acc, z) in sums.iter_mut().zip(s.pre_squash.as_slice()) {
            *acc += z;
        }
    }
    for (i, (mu, sigma)) in [(0.3, 0.5), (-1.2, 2.0)].into_iter().enumerate() {
        let mean = sums[i] / n as f64;
        let se = sigma / (n as f64).sqrt();
        assert!((mean - mu).abs() < 3.0 * se, "coordinate {i}: {mean} vs {mu}");
    }
}

#[test]
fn gaussian_mode_log_density() {
    let head = GaussianHead::from_actor_output(&Matrix::from_rows(&[[0.0, 0.0, 0.0, 0.0]]).unwrap());
    let s = sample_with_noise(&head, Matrix::zeros(1, 2), false);
    assert_eq!(s.action.as_slice(), &[0.0, 0.0]);
    let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    assert!((s.log_prob[0] + 2.0 * half_ln_2pi).abs() < 1e-12);

    let tight = GaussianHead::from_actor_output(&Matrix::from_rows(&[[0.8, -20.0]]).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let a = sample_reparameterized(&tight, true, &mut rng).action.get(0, 0);
    assert!((a - 0.8f64.tanh()).abs() < 1e-6);
}

#[test]
fn soft_update_examples() {
    let mut t = vec![4.0];
    soft_update(&mut t, &[2.0], 0.5).unwrap();
    assert_eq!(t, vec![3.0]);
    soft_update(&mut t, &[7.0], 1.0).unwrap();
    assert_eq!(t, vec![7.0]);
    let mut t = vec![10.0];
    for _ in 0..200 {
        soft_update(&mut t, &[0.0], 0.1).unwrap();
    }
    assert!(t[0].abs() < 1e-8);
    assert!(soft_update(&mut t, &[0.0], 1.5).is_err());
}

#[test]
fn checkpoint_round_trip() {
    let net = Mlp::new(&[4, 6, 2], &mut ChaCha8Rng::seed_from_u64(28)).unwrap();
    assert_eq!(mlp_from_bytes(&mlp_to_bytes(&net)).unwrap(), net);
    assert_eq!(net.num_params(), param_count(&[4, 6, 2]));
}

proptest! {
    #[test]
    fn log_std_is_clamped(raw in -100.0f64..100.0) {
        let head = GaussianHead::from_actor_output(&Matrix::from_rows(&[[0.0, raw]]).unwrap());
        let s = head.log_std.get(0, 0).exp();
        prop_assert!(s >= (-20.0f64).exp() && s <= 2.0f64.exp());
    }

    #[test]
    fn doubling_output_weights_doubles_output(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Mlp::new(&[3, 5, 2], &mut rng).unwrap();
        net.biases_mut(1).iter_mut().for_each(|b| *b = 0.0);
        let x = [0.1, -0.4, 0.9];
        let y = net.forward_one(&x).unwrap();
        net.weights_mut(1).iter_mut().for_each(|w| *w *= 2.0);
        let y2 = net.forward_one(&x).unwrap();
        for (a, b) in y.iter().zip(&y2) {
            prop_assert!((2.0 * a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn soft_update_is_elementwise_affine(
        t in proptest::collection::vec(-10.0f64..10.0, 1..20),
        tau in 0.001f64..1.0,
    ) {
        let o: Vec<f64> = t.iter().map(|v| v * 0.5 + 1.0).collect();
        let mut a = t.clone();
        soft_update(&mut a, &o, tau).unwrap();
        for i in 0..t.len() {
            prop_assert!((a[i] - (tau * o[i] + (1.0 - tau) * t[i])).abs() < 1e-14);
        }
        // one coordinate at a time gives the same result
        let mut b = t.clone();
        for i in (0..t.len()).rev() {
            soft_update(&mut b[i..=i], &o[i..=i], tau).unwrap();
        }
        prop_assert_eq!(a, b);
    }
}
