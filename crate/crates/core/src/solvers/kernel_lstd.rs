//! Kernelized LSTD with nested ridge penalties, with and without the graph
//! Laplacian (manifold) penalty on `Q(X̃)`.
//!
//! With `n` samples, `X̃ = [X; X']` has `2n` rows, `K_h = K(X, X)`,
//! `K_Q = K(X̃, X̃)`, `E = K_h (K_h + λ_h n I)⁻¹` and `F = C₁ − γ E D C₂`,
//! where `D` zeroes the bootstrap term of terminal transitions (`D = I` for
//! non-episodic data). The weights of `Q(x) = αᵀ k(X̃, x)` solve
//!
//! ```text
//! (Fᵀ F K_Q + λ_Q n I + λ_M / (4n) · L K_Q) α = Fᵀ E R
//! ```
//!
//! and `λ_M = 0` gives the plain nested-ridge solution (solved through an
//! equivalent `n × n` positive definite system). The system is the
//! stationarity condition (divided through by `K_Q`) of
//!
//! ```text
//! 1/n ‖Q(X) − h_Q(X)‖² + λ_Q ‖Q‖²_H + λ_M / (2n)² · Q(X̃)ᵀ L Q(X̃)
//! ```
//!
//! where `h_Q(X) = E (R + γ D Q(X'))` is the exact solution of the inner
//! ridge projection as a function of `Q`. The `1/(4n)` factor is therefore
//! the `1/(2n)²` Laplacian weight multiplied by the `n` that clears the
//! data-fit term's `1/n`.

use std::sync::Arc;

use faer::Mat;

use crate::envs::Dataset;
use crate::graph::{build_laplacian, GraphLaplacian};
use crate::kernel::{gram, KernelSpec, PointSet};
use crate::linalg::{self, lu_solve, matmul, matmul_acc, SpdFactor};
use crate::policy::Policy;
use crate::{Error, Result};

use super::qfunction::KernelQFunction;
use super::FitInfo;

/// The policy-independent half of the workspace: `K_h`, the factorized
/// `K_h + λ_h n I` and `E`. Reusable across policy-iteration steps.
pub struct ProjectionOperator {
    k_h: Mat<f64>,
    e: Mat<f64>,
    resolvent: SpdFactor,
    lambda_h: f64,
}

impl ProjectionOperator {
    pub fn new(inputs: &PointSet, spec: &KernelSpec, lambda_h: f64) -> Result<Self> {
        if !(lambda_h > 0.0 && lambda_h.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda_h must be positive, got {lambda_h}")));
        }
        let n = inputs.len();
        let k_h = gram(inputs, inputs, spec)?;
        let shift = lambda_h * n as f64;
        let reg = Mat::from_fn(n, n, |i, j| k_h[(i, j)] + if i == j { shift } else { 0.0 });
        let resolvent = SpdFactor::new(reg.as_ref())?;
        // K_h and its resolvent commute, so (K_h + cI)⁻¹ K_h = Eᵀ.
        let e_t = resolvent.solve(k_h.as_ref());
        let e = e_t.transpose().to_owned();
        Ok(Self { k_h, e, resolvent, lambda_h })
    }

    pub fn len(&self) -> usize {
        self.k_h.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.k_h.nrows() == 0
    }

    pub fn lambda_h(&self) -> f64 {
        self.lambda_h
    }
}

pub struct SolverWorkspace {
    proj: Arc<ProjectionOperator>,
    k_q: Mat<f64>,
    f: Mat<f64>,
    support: PointSet,
    spec: KernelSpec,
    gamma: f64,
    continuation: Vec<f64>,
    num_actions: usize,
    /// Weights of `h_Q(x) = βᵀ k(X, x)`; filled by [`SolverWorkspace::compute_beta`].
    pub beta: Option<Vec<f64>>,
}

impl SolverWorkspace {
    pub fn n(&self) -> usize {
        self.proj.len()
    }

    pub fn k_h(&self) -> &Mat<f64> {
        &self.proj.k_h
    }

    pub fn k_q(&self) -> &Mat<f64> {
        &self.k_q
    }

    pub fn e(&self) -> &Mat<f64> {
        &self.proj.e
    }

    pub fn f(&self) -> &Mat<f64> {
        &self.f
    }

    /// `X̃`
    pub fn support(&self) -> &PointSet {
        &self.support
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `β = (K_h + λ_h n I)⁻¹ (R + γ D C₂ K_Q α)`.
    pub fn compute_beta(&mut self, alpha: &[f64], rewards: &[f64]) -> Result<&[f64]> {
        let n = self.n();
        if alpha.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, got: alpha.len() });
        }
        if rewards.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: rewards.len() });
        }
        let target = Mat::from_fn(n, 1, |i, _| {
            let q_next: f64 = (0..2 * n).map(|j| self.k_q[(n + i, j)] * alpha[j]).sum();
            rewards[i] + self.gamma * self.continuation[i] * q_next
        });
        let beta = linalg::col_to_vec(&self.proj.resolvent.solve(target.as_ref()));
        self.beta = Some(beta);
        Ok(self.beta.as_deref().unwrap())
    }
}

/// Builds `X'` from `policy`, stacks `X̃`, and forms `K_h`, `K_Q`, `E`, `F`.
pub fn assemble_workspace(
    dataset: &Dataset,
    policy: &dyn Policy,
    spec: &KernelSpec,
    lambda_h: f64,
) -> Result<SolverWorkspace> {
    let proj = Arc::new(ProjectionOperator::new(dataset.inputs(), spec, lambda_h)?);
    assemble_with(proj, dataset, policy, spec)
}

/// As [`assemble_workspace`] with a precomputed projection for this dataset.
pub fn assemble_with(
    proj: Arc<ProjectionOperator>,
    dataset: &Dataset,
    policy: &dyn Policy,
    spec: &KernelSpec,
) -> Result<SolverWorkspace> {
    let n = dataset.len();
    if proj.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: proj.len() });
    }
    let gamma = dataset.spec().gamma;
    let continuation = dataset.continuation();
    let next = dataset.next_inputs(policy);
    let support = dataset.inputs().stack(&next)?;
    let k_q = gram(&support, &support, spec)?;
    let e = &proj.e;
    let f = Mat::from_fn(n, 2 * n, |i, j| {
        if j < n {
            if i == j {
                1.0
            } else {
                0.0
            }
        } else {
            let c = j - n;
            -gamma * e[(i, c)] * continuation[c]
        }
    });
    Ok(SolverWorkspace {
        proj,
        k_q,
        f,
        support,
        spec: spec.clone(),
        gamma,
        continuation,
        num_actions: dataset.spec().num_actions,
        beta: None,
    })
}

fn solve_alpha(
    ws: &SolverWorkspace,
    rewards: &[f64],
    laplacian: Option<(&GraphLaplacian, f64)>,
    lambda_q: f64,
) -> Result<(Vec<f64>, FitInfo)> {
    let n = ws.n();
    if rewards.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rewards.len() });
    }
    if !(lambda_q > 0.0 && lambda_q.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda_Q must be positive, got {lambda_q}")));
    }
    if let Some((l, _)) = laplacian {
        if l.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, got: l.len() });
        }
    }
    let er = linalg::mat_vec(ws.proj.e.as_ref(), rewards);
    let shift = lambda_q * n as f64;
    match laplacian.filter(|(l, lambda_m)| *lambda_m != 0.0 && l.num_edges() > 0) {
        None => solve_reduced(ws, &er, shift),
        Some((l, lambda_m)) => solve_full(ws, &er, shift, l, lambda_m),
    }
}

/// Without the graph term the push-through identity
/// `(FᵀF K_Q + μI)⁻¹ Fᵀ = Fᵀ (F K_Q Fᵀ + μI)⁻¹` turns the `2n × 2n`
/// nonsymmetric system into an `n × n` positive definite one.
fn solve_reduced(ws: &SolverWorkspace, er: &[f64], shift: f64) -> Result<(Vec<f64>, FitInfo)> {
    let n = ws.n();
    let k = ws.k_q.as_ref();
    let f_r = ws.f.as_ref().subcols(n, n);
    let (k_tt, k_bt, k_bb) = (k.submatrix(0, 0, n, n), k.submatrix(n, 0, n, n), k.submatrix(n, n, n, n));
    // F K_Q Fᵀ = K_tt + F_r K_bt + (F_r K_bt)ᵀ + F_r K_bb F_rᵀ
    let fk = matmul(f_r, k_bt);
    let mut s = matmul(matmul(f_r, k_bb).as_ref(), f_r.transpose());
    for j in 0..n {
        for i in 0..n {
            s[(i, j)] += k_tt[(i, j)] + fk[(i, j)] + fk[(j, i)];
        }
    }
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
        s[(j, j)] += shift;
    }
    let chol = SpdFactor::new(s.as_ref())?;
    let condition = chol.condition();
    log::debug!("reduced kernel LSTD system: condition estimate {condition:.3e}");
    let v = chol.solve(linalg::col_from_slice(er).as_ref());
    let tail = matmul(f_r.transpose(), v.as_ref());
    let mut alpha = linalg::col_to_vec(&v);
    alpha.extend(linalg::col_to_vec(&tail));
    if alpha.iter().any(|a| !a.is_finite()) {
        return Err(Error::Singular { condition });
    }
    Ok((alpha, FitInfo { condition }))
}

/// The system exactly as printed, solved by LU.
fn solve_full(
    ws: &SolverWorkspace,
    er: &[f64],
    shift: f64,
    l: &GraphLaplacian,
    lambda_m: f64,
) -> Result<(Vec<f64>, FitInfo)> {
    let n = ws.n();
    let m = 2 * n;
    let k_q = ws.k_q.as_ref();
    // F = [I, F_r]; the product is formed blockwise.
    let f_r = ws.f.as_ref().subcols(n, n);
    // G = F K_Q
    let mut g = k_q.subrows(0, n).to_owned();
    matmul_acc(&mut g, f_r, k_q.subrows(n, n), 1.0);
    // Fᵀ G
    let mut sys = Mat::<f64>::zeros(m, m);
    sys.as_mut().subrows_mut(0, n).copy_from(g.as_ref());
    sys.as_mut().subrows_mut(n, n).copy_from(matmul(f_r.transpose(), g.as_ref()).as_ref());
    drop(g);
    for i in 0..m {
        sys[(i, i)] += shift;
    }
    let lk = l.apply(k_q)?;
    let w = lambda_m / (4.0 * n as f64);
    for j in 0..m {
        for i in 0..m {
            sys[(i, j)] += w * lk[(i, j)];
        }
    }
    drop(lk);
    // Fᵀ E R
    let er_col = linalg::col_from_slice(er);
    let mut rhs = Mat::<f64>::zeros(m, 1);
    rhs.as_mut().subrows_mut(0, n).copy_from(er_col.as_ref());
    rhs.as_mut().subrows_mut(n, n).copy_from(matmul(f_r.transpose(), er_col.as_ref()).as_ref());
    let sol = lu_solve(sys.as_ref(), rhs.as_ref())?;
    Ok((linalg::col_to_vec(&sol.x), FitInfo { condition: sol.condition }))
}

pub fn reg_lstd_solve(ws: &SolverWorkspace, rewards: &[f64], lambda_q: f64) -> Result<(KernelQFunction, FitInfo)> {
    let (alpha, info) = solve_alpha(ws, rewards, None, lambda_q)?;
    Ok((KernelQFunction::new(alpha, ws.support.clone(), ws.spec.clone(), ws.num_actions)?, info))
}

pub fn reg_lstd_fit(ws: &SolverWorkspace, rewards: &[f64], lambda_q: f64) -> Result<KernelQFunction> {
    reg_lstd_solve(ws, rewards, lambda_q).map(|(q, _)| q)
}

/// `laplacian` must be built over `X̃` (2n nodes, same order as the workspace support).
pub fn mr_lstd_solve(
    ws: &SolverWorkspace,
    rewards: &[f64],
    laplacian: &GraphLaplacian,
    lambda_q: f64,
    lambda_m: f64,
) -> Result<(KernelQFunction, FitInfo)> {
    if !(lambda_m >= 0.0 && lambda_m.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda_M must be nonnegative, got {lambda_m}")));
    }
    let (alpha, info) = solve_alpha(ws, rewards, Some((laplacian, lambda_m)), lambda_q)?;
    Ok((KernelQFunction::new(alpha, ws.support.clone(), ws.spec.clone(), ws.num_actions)?, info))
}

pub fn mr_lstd_fit(
    ws: &SolverWorkspace,
    rewards: &[f64],
    laplacian: &GraphLaplacian,
    lambda_q: f64,
    lambda_m: f64,
) -> Result<KernelQFunction> {
    mr_lstd_solve(ws, rewards, laplacian, lambda_q, lambda_m).map(|(q, _)| q)
}

/// Epsilon graph over the workspace support `X̃`, measured in the kernel's
/// (possibly standardized) state coordinates.
pub fn support_graph(ws: &SolverWorkspace, epsilon: f64, same_action_only: bool) -> Result<GraphLaplacian> {
    match ws.spec.scaler() {
        Some(sc) => build_laplacian(&sc.apply_points(&ws.support), epsilon, same_action_only),
        None => build_laplacian(&ws.support, epsilon, same_action_only),
    }
}
