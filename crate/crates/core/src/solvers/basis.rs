//! Hand-designed feature maps for the parametric LSTD-Q baselines.
//!
//! Every map produces `k` features per state; the state-action feature is the
//! state vector placed in the block of the chosen action (`k · |A|` total).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::envs::Dataset;
use crate::graph::{build_laplacian, eigenmap_features};
use crate::kernel::PointSet;
use crate::{Error, Result};

use super::qfunction::{join, parse_row, parse_usize};

pub const MAX_POLY_DEGREE: usize = 8;
pub const MIN_RBF_CENTERS: usize = 2;
pub const MAX_RBF_CENTERS: usize = 7;

/// Feature-map descriptor as it appears in configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisKind {
    /// Monomials of total degree `<= degree` in `[0, 1]`-scaled coordinates.
    Polynomial { degree: usize },
    /// Gaussian bumps on a `centers^dim` grid, width equal to the spacing.
    RbfGrid { centers: usize },
    /// `k` smoothest Laplacian eigenvectors of the epsilon graph over sampled states.
    Eigenmap { k: usize, epsilon: f64 },
    /// One indicator per distinct sampled state.
    Tabular,
}

#[derive(Debug, Clone, PartialEq)]
enum StateMap {
    Polynomial { degree: usize, exponents: Vec<Vec<u32>> },
    Rbf { per_dim: usize, centers: Vec<Vec<f64>>, width: f64 },
    /// Features looked up at the nearest anchor state.
    Anchored { label: &'static str, anchors: Vec<Vec<f64>>, table: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    map: StateMap,
    num_actions: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn monomial_exponents(dim: usize, degree: usize) -> Vec<Vec<u32>> {
    fn rec(dim: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == dim {
            if left == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            rec(dim, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=degree as u32 {
        rec(dim, total, &mut Vec::new(), &mut out);
    }
    out
}

fn rbf_map(dim: usize, per_dim: usize) -> StateMap {
    let spacing = 1.0 / (per_dim - 1) as f64;
    let mut grid: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..dim {
        grid = grid
            .into_iter()
            .flat_map(|p| {
                (0..per_dim).map(move |c| {
                    let mut q = p.clone();
                    q.push(c as f64 * spacing);
                    q
                })
            })
            .collect();
    }
    StateMap::Rbf { per_dim, centers: grid, width: spacing }
}

fn unique_states(dataset: &Dataset) -> Vec<Vec<f64>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for s in dataset.samples() {
        for st in [&s.s, &s.s_next] {
            let key: Vec<u64> = st.iter().map(|v| v.to_bits()).collect();
            if seen.insert(key) {
                out.push(st.clone());
            }
        }
    }
    out
}

pub fn make_basis(kind: BasisKind, dataset: &Dataset) -> Result<Basis> {
    let dim = dataset.spec().state_dim;
    let num_actions = dataset.spec().num_actions;
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for s in dataset.samples() {
        for st in [&s.s, &s.s_next] {
            for k in 0..dim {
                lo[k] = lo[k].min(st[k]);
                hi[k] = hi[k].max(st[k]);
            }
        }
    }
    let map = match kind {
        BasisKind::Polynomial { degree } => {
            if degree > MAX_POLY_DEGREE {
                return Err(Error::InvalidParameter(format!("polynomial degree {degree} exceeds {MAX_POLY_DEGREE}")));
            }
            StateMap::Polynomial { degree, exponents: monomial_exponents(dim, degree) }
        }
        BasisKind::RbfGrid { centers } => {
            if !(MIN_RBF_CENTERS..=MAX_RBF_CENTERS).contains(&centers) {
                return Err(Error::InvalidParameter(format!(
                    "RBF centers per dimension must be in {MIN_RBF_CENTERS}..={MAX_RBF_CENTERS}, got {centers}"
                )));
            }
            rbf_map(dim, centers)
        }
        BasisKind::Eigenmap { k, epsilon } => {
            let anchors = unique_states(dataset);
            let mut pts = PointSet::with_capacity(dim, anchors.len());
            for a in &anchors {
                pts.push(a, 0)?;
            }
            let graph = build_laplacian(&pts, epsilon, false)?;
            let feats = eigenmap_features(&graph, k)?;
            let table = (0..anchors.len()).map(|i| feats.node_features(i)).collect();
            StateMap::Anchored { label: "eigenmap", anchors, table }
        }
        BasisKind::Tabular => {
            let anchors = unique_states(dataset);
            let m = anchors.len();
            let table = (0..m).map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
            StateMap::Anchored { label: "tabular", anchors, table }
        }
    };
    Ok(Basis { map, num_actions, lo, hi })
}

impl Basis {
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Features per action block.
    pub fn per_action(&self) -> usize {
        match &self.map {
            StateMap::Polynomial { exponents, .. } => exponents.len(),
            StateMap::Rbf { centers, .. } => centers.len(),
            StateMap::Anchored { table, .. } => table.first().map_or(0, Vec::len),
        }
    }

    pub fn dim(&self) -> usize {
        self.per_action() * self.num_actions
    }

    fn scaled(&self, s: &[f64]) -> Vec<f64> {
        s.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }

    pub fn state_features(&self, s: &[f64]) -> Vec<f64> {
        match &self.map {
            StateMap::Polynomial { exponents, .. } => {
                let z = self.scaled(s);
                exponents
                    .iter()
                    .map(|e| e.iter().zip(&z).map(|(&p, v)| v.powi(p as i32)).product())
                    .collect()
            }
            StateMap::Rbf { centers, width, .. } => {
                let z = self.scaled(s);
                let denom = 2.0 * width * width;
                centers
                    .iter()
                    .map(|c| {
                        let d2: f64 = c.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
                        (-d2 / denom).exp()
                    })
                    .collect()
            }
            StateMap::Anchored { anchors, table, .. } => {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (i, a) in anchors.iter().enumerate() {
                    let d: f64 = a.iter().zip(s).map(|(x, y)| (x - y) * (x - y)).sum();
                    if d < best_d {
                        best_d = d;
                        best = i;
                    }
                }
                table[best].clone()
            }
        }
    }

    /// Dense state-action feature vector.
    pub fn features(&self, s: &[f64], a: usize) -> Vec<f64> {
        let k = self.per_action();
        let mut out = vec![0.0; self.dim()];
        out[a * k..(a + 1) * k].copy_from_slice(&self.state_features(s));
        out
    }

    pub(crate) fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "num_actions,{}", self.num_actions)?;
        writeln!(w, "lo,{}", join(&self.lo))?;
        writeln!(w, "hi,{}", join(&self.hi))?;
        match &self.map {
            StateMap::Polynomial { degree, .. } => writeln!(w, "basis,polynomial,{degree}")?,
            StateMap::Rbf { per_dim, .. } => writeln!(w, "basis,rbf_grid,{per_dim}")?,
            StateMap::Anchored { label, anchors, table } => {
                writeln!(w, "basis,{label},{}", self.per_action())?;
                for (a, row) in anchors.iter().zip(table) {
                    writeln!(w, "anchor,{},{}", join(a), join(row))?;
                }
            }
        }
        Ok(())
    }

    pub(crate) fn read_from(lines: &[Vec<String>]) -> Result<Basis> {
        let find = |key: &str| {
            lines.iter().find(|l| l[0] == key).ok_or_else(|| Error::Parse(format!("missing {key}")))
        };
        let num_actions = parse_usize(&find("num_actions")?[1])?;
        let lo = parse_row(&find("lo")?[1..])?;
        let hi = parse_row(&find("hi")?[1..])?;
        let dim = lo.len();
        let b = find("basis")?;
        if b.len() != 3 {
            return Err(Error::Parse("malformed basis line".into()));
        }
        let param = parse_usize(&b[2])?;
        let map = match b[1].as_str() {
            "polynomial" => StateMap::Polynomial { degree: param, exponents: monomial_exponents(dim, param) },
            "rbf_grid" if param >= MIN_RBF_CENTERS => rbf_map(dim, param),
            label @ ("eigenmap" | "tabular") => {
                let mut anchors = Vec::new();
                let mut table = Vec::new();
                for l in lines.iter().filter(|l| l[0] == "anchor") {
                    if l.len() != 1 + dim + param {
                        return Err(Error::Parse("malformed anchor line".into()));
                    }
                    anchors.push(parse_row(&l[1..1 + dim])?);
                    table.push(parse_row(&l[1 + dim..])?);
                }
                let label = if label == "eigenmap" { "eigenmap" } else { "tabular" };
                StateMap::Anchored { label, anchors, table }
            }
            other => return Err(Error::Parse(format!("unknown basis {other:?}"))),
        };
        Ok(Basis { map, num_actions, lo, hi })
    }
}
