//! Deterministic policies over environment states.

use crate::envs::rng::hash_state;

/// A stationary deterministic policy `π: S → A`.
pub trait Policy: Sync {
    fn action(&self, state: &[f64]) -> usize;
}

impl<F> Policy for F
where
    F: Fn(&[f64]) -> usize + Sync,
{
    fn action(&self, state: &[f64]) -> usize {
        self(state)
    }
}

/// Uniformly random action per state, drawn once from a keyed hash so the
/// same state always maps to the same action within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomPolicy {
    pub seed: u64,
    pub num_actions: usize,
}

impl RandomPolicy {
    pub fn new(seed: u64, num_actions: usize) -> Self {
        assert!(num_actions > 0);
        Self { seed, num_actions }
    }
}

impl Policy for RandomPolicy {
    fn action(&self, state: &[f64]) -> usize {
        (hash_state(self.seed, state) % self.num_actions as u64) as usize
    }
}

/// The same action everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstantPolicy(pub usize);

impl Policy for ConstantPolicy {
    fn action(&self, _state: &[f64]) -> usize {
        self.0
    }
}
