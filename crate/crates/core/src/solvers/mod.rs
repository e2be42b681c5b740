//! Policy-evaluation solvers. Each one fits a Q-function for a fixed policy
//! from a batch of transitions.

pub mod basis;
pub mod kernel_lstd;
pub mod laprls;
pub mod lstdq;
pub mod qfunction;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use basis::{make_basis, Basis, BasisKind};
pub use kernel_lstd::{
    assemble_with, assemble_workspace, mr_lstd_fit, mr_lstd_solve, reg_lstd_fit, reg_lstd_solve, support_graph,
    ProjectionOperator, SolverWorkspace,
};
pub use laprls::{laprls_fit, KernelRegressor};
pub use lstdq::{lstdq_fit, lstdq_solve};
pub use qfunction::{FittedQ, KernelQFunction, LinearQFunction, QFunction};

/// Diagnostics from a linear solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitInfo {
    /// Pivot-ratio condition estimate of the solved system.
    pub condition: f64,
}

/// Regularization and kernel/graph parameters shared by the solvers. Each
/// solver reads only the fields it uses. The discount comes from the MDP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub lambda_h: f64,
    pub lambda_q: f64,
    pub lambda_m: f64,
    pub lambda_f: f64,
    pub sigma: f64,
    pub epsilon: f64,
    /// Diagonal jitter for the parametric normal equations.
    pub ridge: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self { lambda_h: 1e-3, lambda_q: 1e-3, lambda_m: 1e-2, lambda_f: 1e-3, sigma: 1.0, epsilon: 1.0, ridge: 1e-6 }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("lambda_h", self.lambda_h),
            ("lambda_q", self.lambda_q),
            ("lambda_m", self.lambda_m),
            ("lambda_f", self.lambda_f),
            ("ridge", self.ridge),
        ];
        for (name, v) in weights {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}
