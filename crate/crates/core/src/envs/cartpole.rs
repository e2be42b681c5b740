//! Cart-pole balancing with the classic control constants and explicit
//! Euler integration. The learner observes only `(θ, θ̇)`; cart position
//! and velocity are tracked internally but do not enter the pole dynamics.

use rand::Rng as _;

use super::rng::Rng;
use super::{CollectionMode, Dataset, EnvKind, MdpSpec, Sample};
use crate::{Error, Result};

pub const PUSH_LEFT: usize = 0;
pub const PUSH_RIGHT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPoleParams {
    pub gravity: f64,
    pub mass_cart: f64,
    pub mass_pole: f64,
    /// Half the pole length.
    pub length: f64,
    pub force_mag: f64,
    pub tau: f64,
    pub theta_threshold: f64,
    pub max_episode_steps: usize,
    pub gamma: f64,
    /// Initial state components are drawn from `±init_range`.
    pub init_range: f64,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            mass_cart: 1.0,
            mass_pole: 0.1,
            length: 0.5,
            force_mag: 10.0,
            tau: 0.02,
            theta_threshold: 12.0 * 2.0 * std::f64::consts::PI / 360.0,
            max_episode_steps: 200,
            gamma: 0.99,
            init_range: 0.05,
        }
    }
}

impl CartPoleParams {
    pub fn mdp_spec(&self) -> MdpSpec {
        MdpSpec { state_dim: 2, num_actions: 2, gamma: self.gamma, max_episode_steps: Some(self.max_episode_steps) }
    }

    fn total_mass(&self) -> f64 {
        self.mass_cart + self.mass_pole
    }

    fn force(&self, action: usize) -> Result<f64> {
        match action {
            PUSH_LEFT => Ok(-self.force_mag),
            PUSH_RIGHT => Ok(self.force_mag),
            _ => Err(Error::InvalidAction { action, num_actions: 2 }),
        }
    }

    /// `(θ̈, ẍ)` for the given pole state and applied force.
    fn accelerations(&self, theta: f64, theta_dot: f64, force: f64) -> (f64, f64) {
        let (sin, cos) = theta.sin_cos();
        let pole_ml = self.mass_pole * self.length;
        let temp = (force + pole_ml * theta_dot * theta_dot * sin) / self.total_mass();
        let theta_acc = (self.gravity * sin - cos * temp)
            / (self.length * (4.0 / 3.0 - self.mass_pole * cos * cos / self.total_mass()));
        let x_acc = temp - pole_ml * theta_acc * cos / self.total_mass();
        (theta_acc, x_acc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleStep {
    pub next: [f64; 2],
    pub reward: f64,
    /// Pole fell past the threshold.
    pub failed: bool,
}

/// One Euler step of the observable pole dynamics. Reward is −1 when the
/// resulting angle exceeds the threshold, else 0. Time limits are handled by
/// [`CartPole`].
pub fn cartpole_step(params: &CartPoleParams, s: [f64; 2], action: usize) -> Result<PoleStep> {
    let force = params.force(action)?;
    let [theta, theta_dot] = s;
    let (theta_acc, _) = params.accelerations(theta, theta_dot, force);
    let next = [theta + params.tau * theta_dot, theta_dot + params.tau * theta_acc];
    let failed = next[0].abs() > params.theta_threshold;
    Ok(PoleStep { next, reward: if failed { -1.0 } else { 0.0 }, failed })
}

/// Episodic environment with the hidden cart state and the step limit.
#[derive(Debug, Clone)]
pub struct CartPole {
    params: CartPoleParams,
    x: f64,
    x_dot: f64,
    theta: f64,
    theta_dot: f64,
    steps: usize,
    done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvStep {
    pub obs: [f64; 2],
    pub reward: f64,
    pub done: bool,
    /// `done` because the pole fell, as opposed to the step limit.
    pub failed: bool,
}

impl CartPole {
    pub fn new(params: CartPoleParams, rng: &mut Rng) -> Self {
        let mut env = Self { params, x: 0.0, x_dot: 0.0, theta: 0.0, theta_dot: 0.0, steps: 0, done: false };
        env.reset(rng);
        env
    }

    pub fn reset(&mut self, rng: &mut Rng) -> [f64; 2] {
        let r = self.params.init_range;
        self.x = rng.random_range(-r..=r);
        self.x_dot = rng.random_range(-r..=r);
        self.theta = rng.random_range(-r..=r);
        self.theta_dot = rng.random_range(-r..=r);
        self.steps = 0;
        self.done = false;
        self.obs()
    }

    pub fn obs(&self) -> [f64; 2] {
        [self.theta, self.theta_dot]
    }

    pub fn cart(&self) -> (f64, f64) {
        (self.x, self.x_dot)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step(&mut self, action: usize) -> Result<EnvStep> {
        if self.done {
            return Err(Error::EpisodeTerminated);
        }
        let force = self.params.force(action)?;
        let (theta_acc, x_acc) = self.params.accelerations(self.theta, self.theta_dot, force);
        let tau = self.params.tau;
        self.x += tau * self.x_dot;
        self.x_dot += tau * x_acc;
        self.theta += tau * self.theta_dot;
        self.theta_dot += tau * theta_acc;
        self.steps += 1;
        let failed = self.theta.abs() > self.params.theta_threshold;
        self.done = failed || self.steps >= self.params.max_episode_steps;
        Ok(EnvStep { obs: self.obs(), reward: if failed { -1.0 } else { 0.0 }, done: self.done, failed })
    }
}

/// Random-action episodes from perturbed upright starts, concatenated and
/// truncated to exactly `n` transitions.
pub fn collect_episodes(params: &CartPoleParams, n: usize, rng: &mut Rng, seed: u64) -> Dataset {
    let mut samples = Vec::with_capacity(n);
    let mut env = CartPole::new(*params, rng);
    while samples.len() < n {
        let s = env.obs();
        let a = rng.random_range(0..2);
        let step = env.step(a).expect("fresh or running episode");
        samples.push(Sample { s: s.to_vec(), a, r: step.reward, s_next: step.obs.to_vec(), terminal: step.failed });
        if step.done {
            env.reset(rng);
        }
    }
    Dataset::new(samples, params.mdp_spec(), EnvKind::CartPole, CollectionMode::Episodes, seed).expect("n >= 1")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::rng::stream_rng;

    #[test]
    fn upright_push_tips_pole() {
        let p = CartPoleParams::default();
        for a in [PUSH_LEFT, PUSH_RIGHT] {
            let s1 = cartpole_step(&p, [0.0, 0.0], a).unwrap();
            // θ moves one step later, θ̇ immediately
            assert!(s1.next[1].abs() > 0.0);
            let s2 = cartpole_step(&p, s1.next, a).unwrap();
            assert!(s2.next[0].abs() > 0.0);
        }
    }

    #[test]
    fn beyond_threshold_fails() {
        let p = CartPoleParams::default();
        let theta = 12.001f64.to_radians();
        let out = cartpole_step(&p, [theta, 0.0], PUSH_LEFT).unwrap();
        assert!(out.next[0] > p.theta_threshold);
        assert_eq!(out.reward, -1.0);
        assert!(out.failed);
    }

    #[test]
    fn hand_computed_single_step() {
        // push right from θ = 0.05, θ̇ = 0.1
        let (theta, theta_dot, force) = (0.05f64, 0.1f64, 10.0f64);
        let (g, mc, mp, l, tau) = (9.8, 1.0, 0.1, 0.5, 0.02);
        let m = mc + mp;
        let temp = (force + mp * l * theta_dot.powi(2) * theta.sin()) / m;
        let acc = (g * theta.sin() - theta.cos() * temp) / (l * (4.0 / 3.0 - mp * theta.cos().powi(2) / m));
        let want = [theta + tau * theta_dot, theta_dot + tau * acc];
        let got = cartpole_step(&CartPoleParams::default(), [theta, theta_dot], PUSH_RIGHT).unwrap();
        assert!((got.next[0] - want[0]).abs() <= 1e-10);
        assert!((got.next[1] - want[1]).abs() <= 1e-10);
        assert!((got.next[0] - 0.052).abs() < 1e-15);
    }

    #[test]
    fn bad_action() {
        assert!(cartpole_step(&CartPoleParams::default(), [0.0, 0.0], 2).is_err());
    }

    #[test]
    fn deterministic_bitwise() {
        let p = CartPoleParams::default();
        let a = cartpole_step(&p, [0.03, -0.2], PUSH_LEFT).unwrap();
        let b = cartpole_step(&p, [0.03, -0.2], PUSH_LEFT).unwrap();
        assert_eq!(a.next[0].to_bits(), b.next[0].to_bits());
        assert_eq!(a.next[1].to_bits(), b.next[1].to_bits());
    }

    #[test]
    fn env_matches_pure_step_and_refuses_after_done() {
        let p = CartPoleParams::default();
        let mut rng = stream_rng(2, 0);
        let mut env = CartPole::new(p, &mut rng);
        loop {
            let s = env.obs();
            let pure = cartpole_step(&p, s, PUSH_RIGHT).unwrap();
            let st = env.step(PUSH_RIGHT).unwrap();
            assert_eq!(st.obs, pure.next);
            assert_eq!(st.reward, pure.reward);
            if st.done {
                break;
            }
        }
        assert!(matches!(env.step(PUSH_LEFT), Err(Error::EpisodeTerminated)));
    }

    #[test]
    fn episode_truncates_at_step_limit() {
        let p = CartPoleParams { max_episode_steps: 3, ..CartPoleParams::default() };
        let mut rng = stream_rng(3, 0);
        let mut env = CartPole::new(p, &mut rng);
        let mut last = None;
        for i in 0..3 {
            let a = if i % 2 == 0 { PUSH_LEFT } else { PUSH_RIGHT };
            last = Some(env.step(a).unwrap());
        }
        let last = last.unwrap();
        assert!(last.done && !last.failed);
        assert_eq!(last.reward, 0.0);
    }

    #[test]
    fn episode_collection_contract() {
        let p = CartPoleParams::default();
        let mut rng = stream_rng(9, 1);
        let one = collect_episodes(&p, 1, &mut rng, 9);
        assert_eq!(one.len(), 1);
        assert!(one.samples()[0].s.iter().all(|v| v.abs() <= 0.05));

        let ds = collect_episodes(&p, 1500, &mut rng, 9);
        assert_eq!(ds.len(), 1500);
        let samples = ds.samples();
        for (i, s) in samples.iter().enumerate() {
            assert_eq!(s.r, if s.terminal { -1.0 } else { 0.0 });
            // episode starts follow a terminal transition
            if i > 0 && samples[i - 1].terminal {
                assert!(s.s[0].abs() <= 0.05);
            }
        }
        assert!(samples.iter().any(|s| s.terminal));
    }
}
