//! Least-Squares Policy Iteration on a fixed batch of transitions.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::envs::cartpole::{CartPole, CartPoleParams};
use crate::envs::rng::Rng;
use crate::envs::two_room::{OptimalTable, TwoRoom};
use crate::envs::Dataset;
use crate::kernel::{KernelSpec, Standardizer};
use crate::policy::Policy;
use crate::solvers::{
    assemble_with, lstdq_solve, make_basis, mr_lstd_solve, reg_lstd_solve, support_graph, Basis, BasisKind, FitInfo,
    FittedQ, Hyperparams, ProjectionOperator, QFunction,
};
use crate::{Error, Result};

pub const DEFAULT_MAX_ITERATIONS: usize = 50;

/// Relative gap below which two action values count as tied.
pub const GREEDY_TIE_TOL: f64 = 1e-9;

/// Lowest index whose value is within `tol · max(1, |max|)` of the maximum.
/// The tolerance keeps round-off from flipping between equally good actions.
fn argmax_lowest(values: &[f64], tol: f64) -> usize {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cut = top - tol * top.abs().max(1.0);
    values.iter().position(|&v| v >= cut).unwrap_or(0)
}

pub fn greedy_action(q: &dyn QFunction, state: &[f64]) -> usize {
    argmax_lowest(&q.values(state), GREEDY_TIE_TOL)
}

/// `π(s) = argmax_a Q(s, a)`, ties broken toward the lowest action index.
#[derive(Debug, Clone)]
pub struct GreedyPolicy<Q> {
    pub q: Q,
    pub tie_tol: f64,
}

impl<Q: QFunction> GreedyPolicy<Q> {
    pub fn new(q: Q) -> Self {
        Self { q, tie_tol: GREEDY_TIE_TOL }
    }

    /// Exact ties only when `tol = 0`.
    pub fn with_tie_tolerance(mut self, tol: f64) -> Self {
        self.tie_tol = tol;
        self
    }
}

impl<Q: QFunction> Policy for GreedyPolicy<Q> {
    fn action(&self, state: &[f64]) -> usize {
        argmax_lowest(&self.q.values(state), self.tie_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    RegLstd,
    MrLstd,
    Lstdq(BasisKind),
}

/// Evaluation method plus its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub hyper: Hyperparams,
    /// Restrict graph edges to equal actions.
    pub same_action_only: bool,
    /// z-score states (fit on the dataset) before kernel and graph distances.
    pub standardize_states: bool,
}

impl SolverConfig {
    pub fn new(kind: SolverKind, hyper: Hyperparams) -> Self {
        Self { kind, hyper, same_action_only: true, standardize_states: false }
    }
}

enum Prepared {
    Kernel { spec: KernelSpec, proj: Arc<ProjectionOperator> },
    Linear { basis: Basis },
}

fn prepare(dataset: &Dataset, cfg: &SolverConfig) -> Result<Prepared> {
    cfg.hyper.validate()?;
    match cfg.kind {
        SolverKind::RegLstd | SolverKind::MrLstd => {
            let mut spec = KernelSpec::new(cfg.hyper.sigma)?;
            if cfg.standardize_states {
                let states = dataset.samples().iter().flat_map(|s| [s.s.as_slice(), s.s_next.as_slice()]);
                spec = spec.with_scaler(Standardizer::fit(states)?);
            }
            let proj = Arc::new(ProjectionOperator::new(dataset.inputs(), &spec, cfg.hyper.lambda_h)?);
            Ok(Prepared::Kernel { spec, proj })
        }
        SolverKind::Lstdq(kind) => Ok(Prepared::Linear { basis: make_basis(kind, dataset)? }),
    }
}

fn evaluate(dataset: &Dataset, cfg: &SolverConfig, prep: &Prepared, policy: &dyn Policy) -> Result<(FittedQ, FitInfo)> {
    let rewards = dataset.rewards();
    match prep {
        Prepared::Kernel { spec, proj } => {
            let ws = assemble_with(proj.clone(), dataset, policy, spec)?;
            let (q, info) = if cfg.kind == SolverKind::MrLstd {
                let graph = support_graph(&ws, cfg.hyper.epsilon, cfg.same_action_only)?;
                mr_lstd_solve(&ws, &rewards, &graph, cfg.hyper.lambda_q, cfg.hyper.lambda_m)?
            } else {
                reg_lstd_solve(&ws, &rewards, cfg.hyper.lambda_q)?
            };
            Ok((FittedQ::Kernel(q), info))
        }
        Prepared::Linear { basis } => {
            let (q, info) = lstdq_solve(dataset, policy, basis, dataset.spec().gamma, cfg.hyper.ridge)?;
            Ok((FittedQ::Linear(q), info))
        }
    }
}

/// Fits `Q^π` for a single policy with the configured solver.
pub fn evaluate_policy(dataset: &Dataset, cfg: &SolverConfig, policy: &dyn Policy) -> Result<(FittedQ, FitInfo)> {
    let prep = prepare(dataset, cfg)?;
    evaluate(dataset, cfg, &prep, policy)
}

#[derive(Debug, Clone)]
pub struct Iterate {
    pub index: usize,
    pub q: FittedQ,
    pub condition: f64,
    /// Next-state actions that differ between the evaluated policy and its greedy successor.
    pub policy_changes: usize,
    pub metric: Option<f64>,
}

/// One record of the serialized run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub iteration: usize,
    pub condition: f64,
    pub policy_changes: usize,
    pub metric: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LspiRun {
    pub iterates: Vec<Iterate>,
    pub converged_at: Option<usize>,
    pub max_iterations: usize,
    /// Set when a solver failure stopped the run early.
    pub aborted: Option<String>,
}

impl LspiRun {
    pub fn records(&self) -> Vec<IterateRecord> {
        self.iterates
            .iter()
            .map(|it| IterateRecord {
                iteration: it.index,
                condition: it.condition,
                policy_changes: it.policy_changes,
                metric: it.metric,
            })
            .collect()
    }

    /// One JSON object per line, one line per iterate.
    pub fn write_records<W: Write>(&self, mut w: W) -> Result<()> {
        for rec in self.records() {
            serde_json::to_writer(&mut w, &rec)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn final_policy(&self) -> Option<GreedyPolicy<&FittedQ>> {
        self.iterates.last().map(|it| GreedyPolicy::new(&it.q))
    }
}

/// Runs `π_{k+1} = greedy(Q^{π_k})` from `initial` until the greedy policy
/// stops changing on the dataset's next states or `max_iterations` is hit.
/// `metric` is applied to each greedy policy as it is produced.
pub fn lspi_run(
    dataset: &Dataset,
    solver: &SolverConfig,
    initial: &dyn Policy,
    max_iterations: usize,
    mut metric: Option<&mut dyn FnMut(&dyn Policy) -> f64>,
) -> Result<LspiRun> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if max_iterations == 0 {
        return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
    }
    let prep = prepare(dataset, solver)?;
    let next_actions =
        |p: &dyn Policy| -> Vec<usize> { dataset.samples().iter().map(|s| p.action(&s.s_next)).collect() };
    let mut run = LspiRun { iterates: Vec::new(), converged_at: None, max_iterations, aborted: None };
    let mut prev_actions = next_actions(initial);
    for k in 0..max_iterations {
        let fitted = match run.iterates.last() {
            None => evaluate(dataset, solver, &prep, initial),
            Some(prev) => evaluate(dataset, solver, &prep, &GreedyPolicy::new(&prev.q)),
        };
        let (q, info) = match fitted {
            Ok(v) => v,
            Err(e) => {
                log::warn!("LSPI aborted at iteration {k}: {e}");
                run.aborted = Some(format!("iteration {k}: {e}"));
                break;
            }
        };
        let greedy = GreedyPolicy::new(&q);
        let actions = next_actions(&greedy);
        let changes = actions.iter().zip(&prev_actions).filter(|(a, b)| a != b).count();
        let value = metric.as_mut().map(|m| m(&greedy));
        log::debug!("LSPI iteration {k}: {changes} policy changes, condition {:.3e}", info.condition);
        run.iterates.push(Iterate { index: k, q, condition: info.condition, policy_changes: changes, metric: value });
        if changes == 0 {
            run.converged_at = Some(k);
            break;
        }
        prev_actions = actions;
    }
    Ok(run)
}

/// Number of non-goal cells where `policy` picks an action outside the optimal set.
pub fn policy_mismatch_count(policy: &dyn Policy, optimal: &OptimalTable) -> usize {
    OptimalTable::evaluable_cells()
        .filter(|&c| !optimal.is_optimal(c, policy.action(&c.state())))
        .count()
}

/// Number of cells [`policy_mismatch_count`] can count.
pub fn evaluable_cell_count() -> usize {
    OptimalTable::evaluable_cells().count()
}

/// Mean episode length of `policy` over `trials` cart-pole episodes capped at `max_steps`.
pub fn evaluate_rollout(
    policy: &dyn Policy,
    params: &CartPoleParams,
    trials: usize,
    max_steps: usize,
    rng: &mut Rng,
) -> Result<f64> {
    if trials == 0 || max_steps == 0 {
        return Err(Error::InvalidParameter("trials and max_steps must be positive".into()));
    }
    let params = CartPoleParams { max_episode_steps: max_steps, ..*params };
    let mut total = 0usize;
    for _ in 0..trials {
        let mut env = CartPole::new(params, rng);
        loop {
            let a = policy.action(&env.obs());
            if env.step(a)?.done {
                break;
            }
        }
        total += env.steps();
    }
    Ok(total as f64 / trials as f64)
}

/// Convenience wrapper: mismatch count of a greedy policy on the default two-room.
pub fn two_room_mismatches(q: &dyn QFunction) -> usize {
    let table = TwoRoom::default().optimal_policy();
    policy_mismatch_count(&|s: &[f64]| greedy_action(q, s), &table)
}
