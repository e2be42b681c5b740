//! Fitted Q-functions and their flat text serialization.

use std::io::{BufRead, Write};

use crate::kernel::{KernelSpec, PointSet, Standardizer};
use crate::{Error, Result};

use super::basis::Basis;

pub const FORMAT_TAG: &str = "mrlstd-q";
pub const FORMAT_VERSION: u32 = 1;

pub trait QFunction: Send + Sync {
    fn num_actions(&self) -> usize;

    fn value(&self, state: &[f64], action: usize) -> f64;

    fn values(&self, state: &[f64]) -> Vec<f64> {
        (0..self.num_actions()).map(|a| self.value(state, a)).collect()
    }
}

/// `Q(x) = αᵀ k(X̃, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelQFunction {
    alpha: Vec<f64>,
    support: PointSet,
    spec: KernelSpec,
    num_actions: usize,
    // per action: coefficients and standardized support states, row-major;
    // only same-action terms are nonzero
    blocks: Vec<ActionBlock>,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct ActionBlock {
    alpha: Vec<f64>,
    states: Vec<f64>,
}

impl<Q: QFunction> QFunction for &Q {
    fn num_actions(&self) -> usize {
        (**self).num_actions()
    }

    fn value(&self, state: &[f64], action: usize) -> f64 {
        (**self).value(state, action)
    }

    fn values(&self, state: &[f64]) -> Vec<f64> {
        (**self).values(state)
    }
}

impl KernelQFunction {
    pub fn new(alpha: Vec<f64>, support: PointSet, spec: KernelSpec, num_actions: usize) -> Result<Self> {
        if alpha.len() != support.len() {
            return Err(Error::DimensionMismatch { expected: support.len(), got: alpha.len() });
        }
        let mut blocks = vec![ActionBlock::default(); num_actions];
        for i in 0..support.len() {
            let a = support.action(i);
            if a >= num_actions {
                return Err(Error::InvalidAction { action: a, num_actions });
            }
            blocks[a].alpha.push(alpha[i]);
            blocks[a].states.extend(spec.standardize(support.state(i)));
        }
        Ok(Self { alpha, support, spec, num_actions, blocks })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn support(&self) -> &PointSet {
        &self.support
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "format,{FORMAT_TAG},{FORMAT_VERSION}")?;
        writeln!(w, "kind,kernel")?;
        writeln!(w, "sigma,{}", self.spec.sigma())?;
        writeln!(w, "num_actions,{}", self.num_actions)?;
        writeln!(w, "dim,{}", self.support.dim())?;
        if let Some(sc) = self.spec.scaler() {
            writeln!(w, "scaler_mean,{}", join(&sc.mean))?;
            writeln!(w, "scaler_std,{}", join(&sc.std))?;
        }
        for i in 0..self.support.len() {
            writeln!(w, "point,{},{},{}", self.alpha[i], self.support.action(i), join(self.support.state(i)))?;
        }
        Ok(())
    }
}

impl QFunction for KernelQFunction {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn value(&self, state: &[f64], action: usize) -> f64 {
        let denom = 2.0 * self.spec.sigma() * self.spec.sigma();
        let x = self.spec.standardize(state);
        let block = &self.blocks[action];
        block
            .states
            .chunks_exact(x.len().max(1))
            .zip(&block.alpha)
            .map(|(t, a)| {
                let d2: f64 = x.iter().zip(t).map(|(u, v)| (u - v) * (u - v)).sum();
                a * (-d2 / denom).exp()
            })
            .sum()
    }
}

/// `Q(s, a) = wᵀ φ(s, a)` with block-per-action features.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearQFunction {
    w: Vec<f64>,
    basis: Basis,
}

impl LinearQFunction {
    pub fn new(w: Vec<f64>, basis: Basis) -> Result<Self> {
        if w.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), got: w.len() });
        }
        Ok(Self { w, basis })
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "format,{FORMAT_TAG},{FORMAT_VERSION}")?;
        writeln!(w, "kind,linear")?;
        self.basis.write_to(&mut w)?;
        writeln!(w, "w,{}", join(&self.w))?;
        Ok(())
    }
}

impl QFunction for LinearQFunction {
    fn num_actions(&self) -> usize {
        self.basis.num_actions()
    }

    fn value(&self, state: &[f64], action: usize) -> f64 {
        let k = self.basis.per_action();
        let block = &self.w[action * k..(action + 1) * k];
        self.basis.state_features(state).iter().zip(block).map(|(f, w)| f * w).sum()
    }
}

/// Either kind of fitted Q-function.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedQ {
    Kernel(KernelQFunction),
    Linear(LinearQFunction),
}

impl QFunction for FittedQ {
    fn num_actions(&self) -> usize {
        match self {
            FittedQ::Kernel(q) => q.num_actions(),
            FittedQ::Linear(q) => q.num_actions(),
        }
    }

    fn value(&self, state: &[f64], action: usize) -> f64 {
        match self {
            FittedQ::Kernel(q) => q.value(state, action),
            FittedQ::Linear(q) => q.value(state, action),
        }
    }
}

impl FittedQ {
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        match self {
            FittedQ::Kernel(q) => q.write_to(w),
            FittedQ::Linear(q) => q.write_to(w),
        }
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<FittedQ> {
        let lines: Vec<Vec<String>> = r
            .lines()
            .map(|l| l.map(|l| l.split(',').map(|f| f.trim().to_string()).collect()))
            .collect::<std::io::Result<_>>()?;
        let mut it = lines.into_iter().filter(|l| !(l.len() == 1 && l[0].is_empty()));
        let head = it.next().ok_or_else(|| Error::Parse("empty input".into()))?;
        if head.len() != 3 || head[0] != "format" || head[1] != FORMAT_TAG {
            return Err(Error::Parse(format!("not a serialized Q-function: {head:?}")));
        }
        if head[2] != FORMAT_VERSION.to_string() {
            return Err(Error::Parse(format!("unsupported version {}", head[2])));
        }
        let kind = it.next().ok_or_else(|| Error::Parse("missing kind".into()))?;
        let rest: Vec<Vec<String>> = it.collect();
        match kind.get(1).map(String::as_str) {
            Some("kernel") => read_kernel(rest).map(FittedQ::Kernel),
            Some("linear") => read_linear(rest).map(FittedQ::Linear),
            other => Err(Error::Parse(format!("unknown Q-function kind {other:?}"))),
        }
    }
}

pub(crate) fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")))
}

pub(crate) fn parse_usize(s: &str) -> Result<usize> {
    s.parse::<usize>().map_err(|e| Error::Parse(format!("{s:?}: {e}")))
}

pub(crate) fn parse_row(fields: &[String]) -> Result<Vec<f64>> {
    fields.iter().map(|f| parse_f64(f)).collect()
}

fn scalar<'a>(lines: &'a [Vec<String>], key: &str) -> Result<&'a str> {
    lines
        .iter()
        .find(|l| l[0] == key && l.len() == 2)
        .map(|l| l[1].as_str())
        .ok_or_else(|| Error::Parse(format!("missing {key}")))
}

fn read_kernel(lines: Vec<Vec<String>>) -> Result<KernelQFunction> {
    let sigma = parse_f64(scalar(&lines, "sigma")?)?;
    let num_actions = parse_usize(scalar(&lines, "num_actions")?)?;
    let dim = parse_usize(scalar(&lines, "dim")?)?;
    let mut spec = KernelSpec::new(sigma)?;
    let mean = lines.iter().find(|l| l[0] == "scaler_mean");
    let std = lines.iter().find(|l| l[0] == "scaler_std");
    if let (Some(m), Some(s)) = (mean, std) {
        spec = spec.with_scaler(Standardizer { mean: parse_row(&m[1..])?, std: parse_row(&s[1..])? });
    }
    let mut support = PointSet::new(dim);
    let mut alpha = Vec::new();
    for l in lines.iter().filter(|l| l[0] == "point") {
        if l.len() != 3 + dim {
            return Err(Error::Parse(format!("point row has {} fields, expected {}", l.len(), 3 + dim)));
        }
        alpha.push(parse_f64(&l[1])?);
        support.push(&parse_row(&l[3..])?, parse_usize(&l[2])?)?;
    }
    KernelQFunction::new(alpha, support, spec, num_actions)
}

fn read_linear(lines: Vec<Vec<String>>) -> Result<LinearQFunction> {
    let basis = Basis::read_from(&lines)?;
    let w = lines
        .iter()
        .find(|l| l[0] == "w")
        .ok_or_else(|| Error::Parse("missing weights".into()))?;
    LinearQFunction::new(parse_row(&w[1..])?, basis)
}
