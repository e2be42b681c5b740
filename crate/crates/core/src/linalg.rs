//! Thin dense linear-algebra layer over `faer`.
//!
//! Every routine here runs single-threaded so results are bitwise
//! reproducible regardless of how many worker threads the caller uses.

use std::sync::Once;

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Accum, Mat, MatRef, Par, Side};

use crate::{Error, Result};

/// Pivot ratios above this are treated as numerically singular.
pub const MAX_CONDITION: f64 = 1e15;

static SEQUENTIAL: Once = Once::new();

/// Pins faer's global parallelism to sequential execution.
pub fn ensure_sequential() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

pub fn matmul(lhs: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = Mat::<f64>::zeros(lhs.nrows(), rhs.ncols());
    faer::linalg::matmul::matmul(out.as_mut(), Accum::Replace, lhs, rhs, 1.0, Par::Seq);
    out
}

/// `dst += alpha * lhs * rhs`
pub fn matmul_acc(dst: &mut Mat<f64>, lhs: MatRef<'_, f64>, rhs: MatRef<'_, f64>, alpha: f64) {
    faer::linalg::matmul::matmul(dst.as_mut(), Accum::Add, lhs, rhs, alpha, Par::Seq);
}

pub fn mat_vec(a: MatRef<'_, f64>, v: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), v.len());
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * v[j]).sum())
        .collect()
}

pub fn col_from_slice(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

pub fn col_to_vec(m: &Mat<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

/// Solution of a square system together with the pivot-ratio condition
/// estimate `max |u_ii| / min |u_ii|` of its LU factorization.
#[derive(Debug, Clone)]
pub struct LuSolution {
    pub x: Mat<f64>,
    pub condition: f64,
}

/// Solves `a x = b` with partially pivoted LU.
pub fn lu_solve(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Result<LuSolution> {
    ensure_sequential();
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.nrows() });
    }
    let lu = a.partial_piv_lu();
    let u = lu.U();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows() {
        let d = u[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    log::debug!("lu solve n={} pivot-ratio condition {:.3e}", a.nrows(), condition);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::Singular { condition });
    }
    let x = lu.solve(b);
    if x.col_iter().any(|c| c.iter().any(|v| !v.is_finite())) {
        return Err(Error::Singular { condition });
    }
    Ok(LuSolution { x, condition })
}

/// Cholesky factorization of a symmetric positive definite matrix, kept for
/// repeated solves.
pub struct SpdFactor {
    llt: faer::linalg::solvers::Llt<f64>,
}

impl SpdFactor {
    pub fn new(a: MatRef<'_, f64>) -> Result<Self> {
        ensure_sequential();
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
        }
        let llt = a
            .llt(Side::Lower)
            .map_err(|_| Error::Singular { condition: f64::INFINITY })?;
        Ok(Self { llt })
    }

    pub fn solve(&self, b: MatRef<'_, f64>) -> Mat<f64> {
        self.llt.solve(b)
    }

    /// Explicit inverse `A^{-1}`.
    pub fn inverse(&self) -> Mat<f64> {
        self.llt.inverse()
    }

    /// Squared ratio of the extreme diagonal entries of the Cholesky factor,
    /// a cheap lower bound on the 2-norm condition number.
    pub fn condition(&self) -> f64 {
        let l = self.llt.L();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..l.nrows() {
            let d = l[(i, i)].abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (hi / lo).powi(2)
    }
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues in ascending
/// order. Eigenvector signs are normalized so that the entry of largest
/// magnitude (first one on ties) is positive.
pub fn symmetric_eigen(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    ensure_sequential();
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::InvalidParameter(format!("eigendecomposition failed: {e:?}")))?;
    let n = a.nrows();
    let s = evd.S();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
    let values = order.iter().map(|&i| s[i]).collect();
    let mut vectors = Mat::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut pivot = 0usize;
        for r in 0..n {
            if u[(r, src)].abs() > u[(pivot, src)].abs() + 1e-12 {
                pivot = r;
            }
        }
        let sign = if u[(pivot, src)] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vectors[(r, dst)] = sign * u[(r, src)];
        }
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        let a = Mat::from_fn(2, 2, |i, j| [[2.0, 1.0], [1.0, 3.0]][i][j]);
        let b = col_from_slice(&[3.0, 5.0]);
        let sol = lu_solve(a.as_ref(), b.as_ref()).unwrap();
        assert!((sol.x[(0, 0)] - 0.8).abs() < 1e-14);
        assert!((sol.x[(1, 0)] - 1.4).abs() < 1e-14);
        assert!(sol.condition >= 1.0);
    }

    #[test]
    fn lu_reports_singular() {
        let a = Mat::from_fn(2, 2, |_, _| 1.0);
        let b = col_from_slice(&[1.0, 1.0]);
        assert!(matches!(lu_solve(a.as_ref(), b.as_ref()), Err(Error::Singular { .. })));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Mat::from_fn(2, 2, |i, j| if i == j { 0.0 } else { 1.0 });
        assert!(SpdFactor::new(a.as_ref()).is_err());
    }

    #[test]
    fn eigen_sorted_ascending() {
        let a = Mat::from_fn(3, 3, |i, j| [[2.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 5.0]][i][j]);
        let (vals, vecs) = symmetric_eigen(a.as_ref()).unwrap();
        assert_eq!(vals, vec![-1.0, 2.0, 5.0]);
        assert_eq!(vecs[(1, 0)], 1.0);
    }
}
