use rand::Rng;

use crate::error::{ensure, Result};
use crate::nn::Matrix;

/// One stored slot: `(s, a, r, s')` plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    /// Executed element mask.
    pub mask: Vec<bool>,
    /// Executed continuous action in `[-1, 1]^d`.
    pub cont: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
    pub task_id: usize,
}

/// A sampled mini-batch laid out as row matrices. Masks are encoded as ±1.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub states: Matrix,
    pub masks: Matrix,
    pub conts: Matrix,
    pub rewards: Vec<f64>,
    pub next_states: Matrix,
    /// `1.0` for terminal transitions.
    pub terminals: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn from_transitions(items: &[&Transition]) -> Result<Self> {
        ensure!(!items.is_empty(), InvalidArgument, "cannot build an empty batch");
        let rows =
            |f: &dyn Fn(&Transition) -> Vec<f64>| Matrix::from_rows(&items.iter().map(|t| f(t)).collect::<Vec<_>>());
        Ok(Self {
            states: rows(&|t| t.state.clone())?,
            masks: rows(&|t| t.mask.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect())?,
            conts: rows(&|t| t.cont.clone())?,
            rewards: items.iter().map(|t| t.reward).collect(),
            next_states: rows(&|t| t.next_state.clone())?,
            terminals: items.iter().map(|t| if t.terminal { 1.0 } else { 0.0 }).collect(),
        })
    }
}

/// Fixed-capacity ring of transitions with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, items: Vec::new(), next: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Draws `batch` indices uniformly with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<usize>> {
        ensure!(
            batch > 0 && self.items.len() >= batch,
            InvalidState,
            "buffer holds {} transitions, batch of {batch} requested",
            self.items.len()
        );
        Ok((0..batch).map(|_| rng.random_range(0..self.items.len())).collect())
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Batch> {
        let idx = self.sample_indices(batch, rng)?;
        let refs: Vec<&Transition> = idx.iter().map(|&i| &self.items[i]).collect();
        Batch::from_transitions(&refs)
    }
}
