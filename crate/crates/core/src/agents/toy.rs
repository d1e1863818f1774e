//! Small environments with known answers, used to check that the two
//! learners actually learn.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::replay::{ReplayBuffer, Transition};
use super::sac::{SacAgent, SacConfig};
use super::td3::{Td3Agent, Td3Config};
use crate::error::Result;

/// Stateless bandit over `M`-bit masks with additive per-bit payoffs,
/// weak pairwise couplings and Gaussian reward noise.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskBandit {
    pub unary: Vec<f64>,
    pub pairwise: Vec<Vec<f64>>,
    pub noise_std: f64,
}

impl MaskBandit {
    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        let unary = (0..m)
            .map(|_| {
                let mag = rng.random_range(0.3..1.0);
                if rng.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        let pairwise =
            (0..m).map(|i| (0..m).map(|j| if j > i { rng.random_range(-0.05..0.05) } else { 0.0 }).collect()).collect();
        Self { unary, pairwise, noise_std: 0.05 }
    }

    pub fn num_bits(&self) -> usize {
        self.unary.len()
    }

    pub fn expected_reward(&self, mask: &[bool]) -> f64 {
        let b = |i: usize| if mask[i] { 1.0 } else { 0.0 };
        let m = self.num_bits();
        let mut r: f64 = (0..m).map(|i| self.unary[i] * b(i)).sum();
        for i in 0..m {
            for j in i + 1..m {
                r += self.pairwise[i][j] * b(i) * b(j);
            }
        }
        r
    }

    pub fn pull<R: Rng + ?Sized>(&self, mask: &[bool], rng: &mut R) -> f64 {
        let n = Normal::new(0.0, self.noise_std).expect("non-negative std");
        self.expected_reward(mask) + n.sample(rng)
    }

    /// Exhaustive search over all `2^M` masks.
    pub fn optimal_mask(&self) -> Vec<bool> {
        let m = self.num_bits();
        (0..1u64 << m)
            .map(|code| (0..m).map(|i| code >> i & 1 == 1).collect::<Vec<_>>())
            .max_by(|a, b| self.expected_reward(a).total_cmp(&self.expected_reward(b)))
            .expect("at least one mask")
    }
}

/// Trains SAC on a bandit for `steps` pulls and returns its greedy mask.
pub fn train_sac_on_bandit(
    bandit: &MaskBandit,
    steps: usize,
    cfg: SacConfig,
    batch: usize,
    seed: u64,
) -> Result<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = bandit.num_bits();
    let cfg = SacConfig { gamma: 0.0, ..cfg };
    let mut agent = SacAgent::new(1, m, cfg, &mut rng)?;
    let mut buf = ReplayBuffer::new(steps.max(1));
    let state = [1.0];
    for _ in 0..steps {
        let (mask, _) = agent.select(&state, true, &mut rng)?;
        let r = bandit.pull(&mask, &mut rng);
        buf.push(Transition {
            state: state.to_vec(),
            mask,
            cont: Vec::new(),
            reward: r,
            next_state: state.to_vec(),
            terminal: true,
            task_id: 0,
        });
        if buf.len() >= batch {
            let b = buf.sample(batch, &mut rng)?;
            agent.update(&b, &mut rng)?;
        }
    }
    Ok(agent.select(&state, false, &mut rng)?.0)
}

/// Point mass in `[-1, 1]²` steering towards a goal; reward is minus the
/// distance after the move.
#[derive(Debug, Clone, PartialEq)]
pub struct NavigateToGoal {
    pub pos: [f64; 2],
    pub goal: [f64; 2],
    pub step_size: f64,
    pub horizon: usize,
    t: usize,
}

impl NavigateToGoal {
    pub const STATE_DIM: usize = 4;
    pub const ACTION_DIM: usize = 2;

    pub fn new(horizon: usize) -> Self {
        Self { pos: [0.0; 2], goal: [0.0; 2], step_size: 0.1, horizon, t: 0 }
    }

    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        self.pos = [rng.random_range(-0.9..-0.6), rng.random_range(-0.9..-0.6)];
        self.goal = [rng.random_range(0.3..0.6), rng.random_range(0.3..0.6)];
        self.t = 0;
        self.state()
    }

    pub fn state(&self) -> Vec<f64> {
        vec![self.pos[0], self.pos[1], self.goal[0], self.goal[1]]
    }

    pub fn step(&mut self, action: &[f64]) -> (Vec<f64>, f64, bool) {
        for i in 0..2 {
            self.pos[i] = (self.pos[i] + self.step_size * action[i].clamp(-1.0, 1.0)).clamp(-1.0, 1.0);
        }
        self.t += 1;
        let d = (self.pos[0] - self.goal[0]).hypot(self.pos[1] - self.goal[1]);
        (self.state(), -d, self.t >= self.horizon)
    }
}

/// Per-episode returns of TD3 trained on [`NavigateToGoal`].
pub fn train_td3_on_navigation(
    episodes: usize,
    horizon: usize,
    cfg: Td3Config,
    batch: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = NavigateToGoal::new(horizon);
    let mut agent = Td3Agent::new(NavigateToGoal::STATE_DIM, NavigateToGoal::ACTION_DIM, cfg, &mut rng)?;
    let mut buf = ReplayBuffer::new(100_000);
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut s = env.reset(&mut rng);
        let mut ret = 0.0;
        loop {
            let a = agent.act(&s, true, &mut rng)?;
            let (s2, r, done) = env.step(&a);
            ret += r;
            buf.push(Transition {
                state: s,
                mask: Vec::new(),
                cont: a,
                reward: r,
                next_state: s2.clone(),
                terminal: done,
                task_id: 0,
            });
            if buf.len() >= batch {
                let b = buf.sample(batch, &mut rng)?;
                agent.update(&b, &mut rng)?;
            }
            s = s2;
            if done {
                break;
            }
        }
        returns.push(ret);
    }
    Ok(returns)
}

/// Episode returns of a uniform-random policy on [`NavigateToGoal`].
pub fn random_navigation_returns(episodes: usize, horizon: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = NavigateToGoal::new(horizon);
    (0..episodes)
        .map(|_| {
            env.reset(&mut rng);
            let mut ret = 0.0;
            loop {
                let a = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                let (_, r, done) = env.step(&a);
                ret += r;
                if done {
                    return ret;
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_finds_sign_pattern() {
        let b = MaskBandit { unary: vec![0.5, -0.4, 0.9, -0.3], pairwise: vec![vec![0.0; 4]; 4], noise_std: 0.0 };
        assert_eq!(b.optimal_mask(), vec![true, false, true, false]);
        assert!((b.expected_reward(&[true, false, true, false]) - 1.4).abs() < 1e-12);
    }

    #[test]
    fn navigation_reward_is_negative_distance() {
        let mut env = NavigateToGoal::new(3);
        env.pos = [0.0, 0.0];
        env.goal = [0.3, 0.4];
        let (_, r, done) = env.step(&[0.0, 0.0]);
        assert!((r + 0.5).abs() < 1e-12);
        assert!(!done);
        env.step(&[1.0, 1.0]);
        let (s, _, done) = env.step(&[5.0, -5.0]);
        assert!(done);
        assert!((s[0] - 0.2).abs() < 1e-12 && (s[1] - 0.0).abs() < 1e-12);
    }
}
