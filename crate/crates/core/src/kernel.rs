//! Tensor-product state-action kernel
//! `k((s, a), (s', a')) = exp(-‖s - s'‖² / 2σ²) · δ(a, a')`.
//!
//! Only the Gaussian state factor is configurable; actions are always
//! compared with the Kronecker delta since action sets are finite.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A single state-action pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateAction {
    pub state: Vec<f64>,
    pub action: usize,
}

impl StateAction {
    pub fn new(state: impl Into<Vec<f64>>, action: usize) -> Self {
        Self { state: state.into(), action }
    }
}

/// A batch of state-action pairs stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    states: Vec<f64>,
    actions: Vec<usize>,
}

impl PointSet {
    pub fn new(dim: usize) -> Self {
        Self { dim, states: Vec::new(), actions: Vec::new() }
    }

    pub fn with_capacity(dim: usize, cap: usize) -> Self {
        Self { dim, states: Vec::with_capacity(dim * cap), actions: Vec::with_capacity(cap) }
    }

    pub fn from_pairs(pairs: &[StateAction]) -> Result<Self> {
        let first = pairs.first().ok_or(Error::Empty("point set"))?;
        let mut set = Self::with_capacity(first.state.len(), pairs.len());
        for p in pairs {
            set.push(&p.state, p.action)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, state: &[f64], action: usize) -> Result<()> {
        if state.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: state.len() });
        }
        self.states.extend_from_slice(state);
        self.actions.push(action);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn action(&self, i: usize) -> usize {
        self.actions[i]
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn get(&self, i: usize) -> StateAction {
        StateAction::new(self.state(i), self.action(i))
    }

    /// `[self; other]`
    pub fn stack(&self, other: &PointSet) -> Result<PointSet> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut out = self.clone();
        out.states.extend_from_slice(&other.states);
        out.actions.extend_from_slice(&other.actions);
        Ok(out)
    }

    /// Reorders points so that point `i` of the result is point `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> PointSet {
        let mut out = Self::with_capacity(self.dim, perm.len());
        for &p in perm {
            out.states.extend_from_slice(self.state(p));
            out.actions.push(self.actions[p]);
        }
        out
    }
}

/// Per-dimension z-score transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits mean and (population) standard deviation over `states`.
    /// Constant dimensions get a unit scale.
    pub fn fit<'a>(states: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut count = 0usize;
        let mut sum: Vec<f64> = Vec::new();
        let mut sq: Vec<f64> = Vec::new();
        for s in states {
            if count == 0 {
                sum = vec![0.0; s.len()];
                sq = vec![0.0; s.len()];
            } else if s.len() != sum.len() {
                return Err(Error::DimensionMismatch { expected: sum.len(), got: s.len() });
            }
            for (k, v) in s.iter().enumerate() {
                sum[k] += v;
                sq[k] += v * v;
            }
            count += 1;
        }
        if count == 0 {
            return Err(Error::Empty("standardizer input"));
        }
        let n = count as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let var = (q / n - m * m).max(0.0);
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, s: &[f64]) -> Vec<f64> {
        s.iter().zip(&self.mean).zip(&self.std).map(|((v, m), d)| (v - m) / d).collect()
    }

    pub fn apply_points(&self, points: &PointSet) -> PointSet {
        let mut out = PointSet::with_capacity(points.dim(), points.len());
        for i in 0..points.len() {
            out.states.extend(self.apply(points.state(i)));
            out.actions.push(points.action(i));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    sigma: f64,
    /// Optional state standardization applied before distances are taken.
    scaler: Option<Standardizer>,
}

impl KernelSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("kernel bandwidth must be positive, got {sigma}")));
        }
        Ok(Self { sigma, scaler: None })
    }

    pub fn with_scaler(mut self, scaler: Standardizer) -> Self {
        self.scaler = Some(scaler);
        self
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn scaler(&self) -> Option<&Standardizer> {
        self.scaler.as_ref()
    }

    /// The state in the kernel's distance coordinates.
    pub(crate) fn standardize(&self, s: &[f64]) -> Vec<f64> {
        match &self.scaler {
            None => s.to_vec(),
            Some(sc) => s.iter().zip(&sc.std).map(|(a, d)| a / d).collect(),
        }
    }

    pub(crate) fn sq_dist(&self, s: &[f64], t: &[f64]) -> f64 {
        match &self.scaler {
            None => s.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum(),
            Some(sc) => s
                .iter()
                .zip(t)
                .zip(&sc.std)
                .map(|((a, b), d)| {
                    let z = (a - b) / d;
                    z * z
                })
                .sum(),
        }
    }

    /// Gaussian state factor only.
    pub fn state_kernel(&self, s: &[f64], t: &[f64]) -> f64 {
        (-self.sq_dist(s, t) / (2.0 * self.sigma * self.sigma)).exp()
    }
}

pub fn eval_kernel(x: &StateAction, x_prime: &StateAction, spec: &KernelSpec) -> Result<f64> {
    if x.state.len() != x_prime.state.len() {
        return Err(Error::DimensionMismatch { expected: x.state.len(), got: x_prime.state.len() });
    }
    if let Some(sc) = spec.scaler() {
        if sc.std.len() != x.state.len() {
            return Err(Error::DimensionMismatch { expected: sc.std.len(), got: x.state.len() });
        }
    }
    if x.action != x_prime.action {
        return Ok(0.0);
    }
    Ok(spec.state_kernel(&x.state, &x_prime.state))
}

/// `|a| × |b|` matrix with entry `(i, j) = k(a_i, b_j)`.
pub fn gram(points_a: &PointSet, points_b: &PointSet, spec: &KernelSpec) -> Result<Mat<f64>> {
    if points_a.is_empty() || points_b.is_empty() {
        return Err(Error::Empty("gram input"));
    }
    if points_a.dim() != points_b.dim() {
        return Err(Error::DimensionMismatch { expected: points_a.dim(), got: points_b.dim() });
    }
    if let Some(sc) = spec.scaler() {
        if sc.std.len() != points_a.dim() {
            return Err(Error::DimensionMismatch { expected: sc.std.len(), got: points_a.dim() });
        }
    }
    let denom = 2.0 * spec.sigma * spec.sigma;
    Ok(Mat::from_fn(points_a.len(), points_b.len(), |i, j| {
        if points_a.action(i) != points_b.action(j) {
            0.0
        } else {
            (-spec.sq_dist(points_a.state(i), points_b.state(j)) / denom).exp()
        }
    }))
}
