//! LSTD-Q over a fixed linear basis:
//! `w = (Φᵀ (Φ − γ D Φ') + ridge · I)⁻¹ Φᵀ R`.

use faer::Mat;

use crate::envs::Dataset;
use crate::linalg::{col_from_slice, col_to_vec, lu_solve};
use crate::policy::Policy;
use crate::{Error, Result};

use super::basis::Basis;
use super::qfunction::LinearQFunction;
use super::FitInfo;

pub fn lstdq_solve(
    dataset: &Dataset,
    policy: &dyn Policy,
    basis: &Basis,
    gamma: f64,
    ridge: f64,
) -> Result<(LinearQFunction, FitInfo)> {
    if ridge < 0.0 {
        return Err(Error::InvalidParameter(format!("ridge must be nonnegative, got {ridge}")));
    }
    let k = basis.per_action();
    let p = basis.dim();
    if p > dataset.len() {
        log::warn!("LSTD-Q with {p} features but only {} samples", dataset.len());
    }
    let mut a_mat = Mat::<f64>::zeros(p, p);
    let mut b = vec![0.0; p];
    for i in 0..p {
        a_mat[(i, i)] = ridge;
    }
    for s in dataset.samples() {
        let psi = basis.state_features(&s.s);
        let row0 = s.a * k;
        for (u, pu) in psi.iter().enumerate() {
            b[row0 + u] += pu * s.r;
            for (v, pv) in psi.iter().enumerate() {
                a_mat[(row0 + u, row0 + v)] += pu * pv;
            }
        }
        if !s.terminal && gamma != 0.0 {
            let next_a = policy.action(&s.s_next);
            let psi_next = basis.state_features(&s.s_next);
            let col0 = next_a * k;
            for (u, pu) in psi.iter().enumerate() {
                for (v, pv) in psi_next.iter().enumerate() {
                    a_mat[(row0 + u, col0 + v)] -= gamma * pu * pv;
                }
            }
        }
    }
    let sol = lu_solve(a_mat.as_ref(), col_from_slice(&b).as_ref())?;
    Ok((LinearQFunction::new(col_to_vec(&sol.x), basis.clone())?, FitInfo { condition: sol.condition }))
}

pub fn lstdq_fit(
    dataset: &Dataset,
    policy: &dyn Policy,
    basis: &Basis,
    gamma: f64,
    ridge: f64,
) -> Result<LinearQFunction> {
    lstdq_solve(dataset, policy, basis, gamma, ridge).map(|(q, _)| q)
}
