//! Laplacian-regularized least squares: kernel ridge regression with an
//! added `λ_M / n² · f(X)ᵀ L f(X)` smoothness term. Weights solve
//! `(K + λ_f n I + λ_M / n · L K) α = Y`.

use faer::Mat;

use crate::graph::GraphLaplacian;
use crate::kernel::{gram, KernelSpec, PointSet, StateAction};
use crate::linalg::{col_from_slice, col_to_vec, lu_solve};
use crate::{Error, Result};

/// `f(x) = αᵀ k(X, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRegressor {
    pub alpha: Vec<f64>,
    pub support: PointSet,
    pub spec: KernelSpec,
}

impl KernelRegressor {
    pub fn predict(&self, x: &StateAction) -> f64 {
        (0..self.support.len())
            .filter(|&j| self.support.action(j) == x.action)
            .map(|j| self.alpha[j] * self.spec.state_kernel(&x.state, self.support.state(j)))
            .sum()
    }
}

pub fn laprls_fit(
    x: &PointSet,
    y: &[f64],
    spec: &KernelSpec,
    laplacian: &GraphLaplacian,
    lambda_f: f64,
    lambda_m: f64,
) -> Result<KernelRegressor> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if laplacian.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: laplacian.len() });
    }
    if lambda_f < 0.0 || lambda_m < 0.0 {
        return Err(Error::InvalidParameter("regularization weights must be nonnegative".into()));
    }
    let k = gram(x, x, spec)?;
    let lk = laplacian.apply(k.as_ref())?;
    let nf = n as f64;
    let sys = Mat::from_fn(n, n, |i, j| {
        k[(i, j)] + lambda_m / nf * lk[(i, j)] + if i == j { lambda_f * nf } else { 0.0 }
    });
    let sol = lu_solve(sys.as_ref(), col_from_slice(y).as_ref())?;
    Ok(KernelRegressor { alpha: col_to_vec(&sol.x), support: x.clone(), spec: spec.clone() })
}
