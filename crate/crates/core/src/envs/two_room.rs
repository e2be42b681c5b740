//! 10×10 two-room gridworld.
//!
//! Columns 0–4 form the west room and columns 5–9 the east room. A wall runs
//! along the boundary between x = 4 and x = 5, open only at the doorway row
//! y = 5. The agent starts at (0, 0); the goal (9, 9) is absorbing and pays
//! 1 on entry. Moves succeed with probability 0.9, otherwise the agent stays.

use faer::Mat;
use rand::Rng as _;

use super::rng::Rng;
use super::{CollectionMode, Dataset, EnvKind, MdpSpec, Sample};
use crate::linalg::{col_from_slice, lu_solve};
use crate::policy::Policy;
use crate::{Error, Result};

pub const GRID: usize = 10;
pub const NUM_CELLS: usize = GRID * GRID;
pub const NUM_ACTIONS: usize = 4;
pub const DOORWAY_ROW: usize = 5;
/// Cells with `x <= WEST_EDGE` are in the west room.
pub const WEST_EDGE: usize = 4;
pub const SUCCESS_PROB: f64 = 0.9;

pub const UP: usize = 0;
pub const RIGHT: usize = 1;
pub const DOWN: usize = 2;
pub const LEFT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn index(self) -> usize {
        self.y * GRID + self.x
    }

    pub fn from_index(i: usize) -> Self {
        Self { x: i % GRID, y: i / GRID }
    }

    pub fn state(self) -> Vec<f64> {
        vec![self.x as f64, self.y as f64]
    }

    pub fn from_state(s: &[f64]) -> Result<Self> {
        if s.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: s.len() });
        }
        let ok = |v: f64| v >= 0.0 && v <= (GRID - 1) as f64 && v.fract() == 0.0;
        if !ok(s[0]) || !ok(s[1]) {
            return Err(Error::InvalidState(format!("{s:?} is not a grid cell")));
        }
        Ok(Self::new(s[0] as usize, s[1] as usize))
    }

    pub fn all() -> impl Iterator<Item = Cell> {
        (0..NUM_CELLS).map(Cell::from_index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoRoom {
    pub gamma: f64,
    pub goal_reward: f64,
}

impl Default for TwoRoom {
    fn default() -> Self {
        Self { gamma: 0.9, goal_reward: 1.0 }
    }
}

impl TwoRoom {
    pub const START: Cell = Cell::new(0, 0);
    pub const GOAL: Cell = Cell::new(GRID - 1, GRID - 1);

    pub fn mdp_spec(&self) -> MdpSpec {
        MdpSpec { state_dim: 2, num_actions: NUM_ACTIONS, gamma: self.gamma, max_episode_steps: None }
    }

    /// Cell reached by a successful move, or `cell` itself when the move is
    /// blocked by the border or the wall.
    pub fn target(cell: Cell, action: usize) -> Cell {
        let Cell { x, y } = cell;
        let crosses_wall = |from: usize, to: usize| {
            let (lo, hi) = (from.min(to), from.max(to));
            lo == WEST_EDGE && hi == WEST_EDGE + 1 && y != DOORWAY_ROW
        };
        match action {
            UP if y + 1 < GRID => Cell::new(x, y + 1),
            DOWN if y > 0 => Cell::new(x, y - 1),
            RIGHT if x + 1 < GRID && !crosses_wall(x, x + 1) => Cell::new(x + 1, y),
            LEFT if x > 0 && !crosses_wall(x, x - 1) => Cell::new(x - 1, y),
            _ => cell,
        }
    }

    pub fn is_blocked(cell: Cell, action: usize) -> bool {
        Self::target(cell, action) == cell
    }

    fn check(cell: Cell, action: usize) -> Result<()> {
        if cell.x >= GRID || cell.y >= GRID {
            return Err(Error::InvalidState(format!("{cell:?} outside the grid")));
        }
        if action >= NUM_ACTIONS {
            return Err(Error::InvalidAction { action, num_actions: NUM_ACTIONS });
        }
        Ok(())
    }

    /// Transition with the success branch fixed by the caller.
    pub fn step_with(&self, cell: Cell, action: usize, success: bool) -> Result<(Cell, f64)> {
        Self::check(cell, action)?;
        if cell == Self::GOAL {
            return Ok((cell, 0.0));
        }
        let next = if success { Self::target(cell, action) } else { cell };
        let r = if next == Self::GOAL { self.goal_reward } else { 0.0 };
        Ok((next, r))
    }

    pub fn step(&self, cell: Cell, action: usize, rng: &mut Rng) -> Result<(Cell, f64)> {
        let success = rng.random::<f64>() < SUCCESS_PROB;
        self.step_with(cell, action, success)
    }

    /// Enumerates `(next, probability, reward)` for a state-action pair, with
    /// identical next cells merged.
    pub fn outcomes(&self, cell: Cell, action: usize) -> Vec<(Cell, f64, f64)> {
        if cell == Self::GOAL {
            return vec![(cell, 1.0, 0.0)];
        }
        let target = Self::target(cell, action);
        let reward = |c: Cell| if c == Self::GOAL { self.goal_reward } else { 0.0 };
        if target == cell {
            vec![(cell, 1.0, 0.0)]
        } else {
            vec![(target, SUCCESS_PROB, reward(target)), (cell, 1.0 - SUCCESS_PROB, 0.0)]
        }
    }

    /// Expected immediate reward `r(s, a)`.
    pub fn expected_reward(&self, cell: Cell, action: usize) -> f64 {
        self.outcomes(cell, action).iter().map(|(_, p, r)| p * r).sum()
    }

    /// Optimal action sets by Q-value iteration on the exact model.
    pub fn optimal_policy(&self) -> OptimalTable {
        let mut q = vec![[0.0f64; NUM_ACTIONS]; NUM_CELLS];
        let mut residual = f64::INFINITY;
        let mut sweeps = 0;
        while residual > 1e-12 && sweeps < 100_000 {
            let v: Vec<f64> = q.iter().map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
            residual = 0.0;
            for cell in Cell::all() {
                for a in 0..NUM_ACTIONS {
                    let new: f64 = self
                        .outcomes(cell, a)
                        .iter()
                        .map(|&(next, p, r)| p * (r + self.gamma * v[next.index()]))
                        .sum();
                    residual = f64::max(residual, (new - q[cell.index()][a]).abs());
                    q[cell.index()][a] = new;
                }
            }
            sweeps += 1;
        }
        OptimalTable::from_q(q, residual)
    }

    /// `Q^π` from the linear system `(I - γ P_π) Q = r`, |S|·|A| = 400 unknowns.
    pub fn exact_q_pi(&self, policy: &dyn Policy) -> Result<Vec<[f64; NUM_ACTIONS]>> {
        let dim = NUM_CELLS * NUM_ACTIONS;
        let idx = |c: Cell, a: usize| c.index() * NUM_ACTIONS + a;
        let pi: Vec<usize> = Cell::all().map(|c| policy.action(&c.state())).collect();
        if let Some(&bad) = pi.iter().find(|&&a| a >= NUM_ACTIONS) {
            return Err(Error::InvalidAction { action: bad, num_actions: NUM_ACTIONS });
        }
        let mut a_mat = Mat::<f64>::identity(dim, dim);
        let mut rhs = vec![0.0; dim];
        for cell in Cell::all() {
            for a in 0..NUM_ACTIONS {
                let row = idx(cell, a);
                for (next, p, r) in self.outcomes(cell, a) {
                    rhs[row] += p * r;
                    a_mat[(row, idx(next, pi[next.index()]))] -= self.gamma * p;
                }
            }
        }
        let sol = lu_solve(a_mat.as_ref(), col_from_slice(&rhs).as_ref())?;
        Ok((0..NUM_CELLS)
            .map(|c| {
                let mut row = [0.0; NUM_ACTIONS];
                for (a, v) in row.iter_mut().enumerate() {
                    *v = sol.x[(c * NUM_ACTIONS + a, 0)];
                }
                row
            })
            .collect())
    }
}

/// Tolerance for treating two Q-values as tied when collecting optimal actions.
pub const OPTIMAL_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalTable {
    pub q: Vec<[f64; NUM_ACTIONS]>,
    pub actions: Vec<Vec<usize>>,
    pub residual: f64,
}

impl OptimalTable {
    pub fn from_q(q: Vec<[f64; NUM_ACTIONS]>, residual: f64) -> Self {
        let actions = q
            .iter()
            .map(|row| {
                let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (0..NUM_ACTIONS).filter(|&a| row[a] >= best - OPTIMAL_TIE_TOL).collect()
            })
            .collect();
        Self { q, actions, residual }
    }

    pub fn optimal_actions(&self, cell: Cell) -> &[usize] {
        &self.actions[cell.index()]
    }

    pub fn is_optimal(&self, cell: Cell, action: usize) -> bool {
        self.actions[cell.index()].contains(&action)
    }

    /// Cells whose action counts toward mismatches (everything but the goal).
    pub fn evaluable_cells() -> impl Iterator<Item = Cell> {
        Cell::all().filter(|&c| c != TwoRoom::GOAL)
    }
}

/// `n` transitions with `(s, a)` uniform over cells × actions.
pub fn collect_uniform(env: &TwoRoom, n: usize, rng: &mut Rng, seed: u64) -> Dataset {
    let samples = (0..n)
        .map(|_| {
            let cell = Cell::from_index(rng.random_range(0..NUM_CELLS));
            let a = rng.random_range(0..NUM_ACTIONS);
            let (next, r) = env.step(cell, a, rng).expect("valid cell and action");
            Sample { s: cell.state(), a, r, s_next: next.state(), terminal: false }
        })
        .collect();
    Dataset::new(samples, env.mdp_spec(), EnvKind::TwoRoom, CollectionMode::Uniform, seed).expect("n >= 1")
}

/// Every `(s, a)` pair, each outcome replicated `round(10 p)` times so the
/// empirical transition frequencies equal the model's. Deterministic
/// outcomes appear once.
pub fn collect_exhaustive(env: &TwoRoom) -> Dataset {
    let mut samples = Vec::new();
    for cell in Cell::all() {
        for a in 0..NUM_ACTIONS {
            let outs = env.outcomes(cell, a);
            for (next, p, r) in outs.iter().copied() {
                let copies = if outs.len() == 1 { 1 } else { (p * 10.0).round() as usize };
                for _ in 0..copies {
                    samples.push(Sample { s: cell.state(), a, r, s_next: next.state(), terminal: false });
                }
            }
        }
    }
    Dataset::new(samples, env.mdp_spec(), EnvKind::TwoRoom, CollectionMode::Exhaustive, 0).expect("nonempty")
}
