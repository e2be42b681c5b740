//! Kernelized least-squares temporal-difference policy evaluation with
//! graph-Laplacian (manifold) regularization, plus the pieces needed to
//! benchmark it: a Gaussian state-action kernel, epsilon-neighborhood graph
//! Laplacians, two reference MDPs, parametric LSTD-Q baselines, a
//! Least-Squares Policy Iteration driver and a seeded experiment harness.
//!
//! The main entry points are:
//!
//! | Item | Purpose |
//! |------|---------|
//! | [`kernel::gram`] | Gram / cross-Gram matrices for the delta-action Gaussian kernel |
//! | [`graph::build_laplacian`] | Combinatorial Laplacian `L = D - W` of an epsilon graph |
//! | [`solvers::reg_lstd_fit`] | Nested-ridge kernel LSTD |
//! | [`solvers::mr_lstd_fit`] | Kernel LSTD with an added `‖Q(X̃)‖²_L` penalty |
//! | [`solvers::lstdq_fit`] | LSTD-Q over polynomial / RBF / eigenmap features |
//! | [`lspi::lspi_run`] | Policy iteration on a fixed batch of transitions |
//! | [`harness::run_experiment`] | Seed-replicated, grid-tuned benchmark runs |

pub mod envs;
pub mod graph;
pub mod harness;
pub mod kernel;
pub mod linalg;
pub mod lspi;
pub mod policy;
pub mod solvers;

mod error;

pub use error::{Error, Result};
