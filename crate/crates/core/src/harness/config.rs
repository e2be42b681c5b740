//! Declarative experiment configuration (TOML).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envs::EnvKind;
use crate::lspi::{SolverConfig, SolverKind, DEFAULT_MAX_ITERATIONS};
use crate::solvers::basis::{MAX_POLY_DEGREE, MAX_RBF_CENTERS, MIN_RBF_CENTERS};
use crate::solvers::{BasisKind, Hyperparams};
use crate::{Error, Result};

pub const ALLOWED_SAMPLE_SIZES: [usize; 3] = [250, 500, 1000];
pub const DEFAULT_SEEDS: usize = 100;
pub const FAST_SEEDS: usize = 20;
pub const DEFAULT_ROLLOUT_TRIALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Polynomial,
    Rbf,
    Eigenmap,
    RegLstd,
    MrLstd,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Polynomial, Method::Rbf, Method::Eigenmap, Method::RegLstd, Method::MrLstd];

    pub fn name(self) -> &'static str {
        match self {
            Method::Polynomial => "polynomial",
            Method::Rbf => "rbf",
            Method::Eigenmap => "eigenmap",
            Method::RegLstd => "reg_lstd",
            Method::MrLstd => "mr_lstd",
        }
    }

    pub fn is_kernel(self) -> bool {
        matches!(self, Method::RegLstd | Method::MrLstd)
    }
}

/// Candidate values per hyperparameter. Axes left empty take the defaults
/// for the environment; axes a method does not read are ignored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub sigma: Vec<f64>,
    pub lambda_h: Vec<f64>,
    pub lambda_q: Vec<f64>,
    pub lambda_m: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub degree: Vec<usize>,
    pub centers: Vec<usize>,
    pub eigen_k: Vec<usize>,
    pub ridge: Vec<f64>,
}

fn or_default<T: Clone>(v: &[T], default: &[T]) -> Vec<T> {
    if v.is_empty() {
        default.to_vec()
    } else {
        v.to_vec()
    }
}

impl Grid {
    /// Fills empty axes with the environment defaults.
    pub fn resolved(&self, env: EnvKind) -> Grid {
        let eps: &[f64] = match env {
            EnvKind::TwoRoom => &[1.0],
            EnvKind::CartPole => &[0.1, 0.2, 0.5],
        };
        let k: &[usize] = &[5, 10, 15, 20, 25, 30];
        Grid {
            sigma: or_default(&self.sigma, &[0.25, 0.5, 1.0, 2.0]),
            lambda_h: or_default(&self.lambda_h, &[1e-4, 1e-3, 1e-2, 1e-1]),
            lambda_q: or_default(&self.lambda_q, &[1e-4, 1e-3, 1e-2, 1e-1]),
            lambda_m: or_default(&self.lambda_m, &[1e-3, 1e-2, 1e-1, 1.0]),
            epsilon: or_default(&self.epsilon, eps),
            degree: or_default(&self.degree, &(1..=MAX_POLY_DEGREE).collect::<Vec<_>>()),
            centers: or_default(&self.centers, &(MIN_RBF_CENTERS..=MAX_RBF_CENTERS).collect::<Vec<_>>()),
            eigen_k: or_default(&self.eigen_k, k),
            ridge: or_default(&self.ridge, &[Hyperparams::default().ridge]),
        }
    }
}

/// One point of a grid, already specialized to a method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub solver: SolverConfig,
}

impl Setting {
    /// Compact `key=value` description of the axes the method reads.
    pub fn describe(&self) -> String {
        let h = &self.solver.hyper;
        match self.solver.kind {
            SolverKind::RegLstd => {
                format!("sigma={} lambda_h={} lambda_q={}", h.sigma, h.lambda_h, h.lambda_q)
            }
            SolverKind::MrLstd => format!(
                "sigma={} lambda_h={} lambda_q={} lambda_m={} epsilon={}",
                h.sigma, h.lambda_h, h.lambda_q, h.lambda_m, h.epsilon
            ),
            SolverKind::Lstdq(BasisKind::Polynomial { degree }) => format!("degree={degree} ridge={}", h.ridge),
            SolverKind::Lstdq(BasisKind::RbfGrid { centers }) => format!("centers={centers} ridge={}", h.ridge),
            SolverKind::Lstdq(BasisKind::Eigenmap { k, epsilon }) => {
                format!("k={k} epsilon={epsilon} ridge={}", h.ridge)
            }
            SolverKind::Lstdq(BasisKind::Tabular) => format!("tabular ridge={}", h.ridge),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub environment: EnvKind,
    pub method: Method,
    pub n_samples: usize,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    /// Seeds run are `seed_offset .. seed_offset + seeds`.
    #[serde(default)]
    pub seed_offset: u64,
    #[serde(default = "default_max_iter")]
    pub max_lspi_iter: usize,
    #[serde(default = "default_trials")]
    pub rollout_trials: usize,
    #[serde(default = "default_true")]
    pub same_action_only: bool,
    /// Defaults to true for cart-pole and false for two-room.
    #[serde(default)]
    pub standardize_states: Option<bool>,
    #[serde(default)]
    pub grid: Grid,
}

fn default_seeds() -> usize {
    DEFAULT_SEEDS
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITERATIONS
}

fn default_trials() -> usize {
    DEFAULT_ROLLOUT_TRIALS
}

fn default_true() -> bool {
    true
}

fn check_positive(name: &str, values: &[f64]) -> Result<()> {
    for &v in values {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("grid.{name} values must be positive, got {v}")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn new(environment: EnvKind, method: Method, n_samples: usize) -> Self {
        Self {
            name: None,
            environment,
            method,
            n_samples,
            seeds: DEFAULT_SEEDS,
            seed_offset: 0,
            max_lspi_iter: DEFAULT_MAX_ITERATIONS,
            rollout_trials: DEFAULT_ROLLOUT_TRIALS,
            same_action_only: true,
            standardize_states: None,
            grid: Grid::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn label(&self) -> String {
        match &self.name {
            Some(n) => n.clone(),
            None => format!("{}_{}_{}", self.environment.name(), self.method.name(), self.n_samples),
        }
    }

    pub fn standardize(&self) -> bool {
        self.standardize_states.unwrap_or(self.environment == EnvKind::CartPole)
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.seed_offset + i).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.method == Method::Eigenmap && self.environment != EnvKind::TwoRoom {
            return Err(Error::Config("the eigenmap method is only available for two_room".into()));
        }
        if !ALLOWED_SAMPLE_SIZES.contains(&self.n_samples) {
            return Err(Error::Config(format!(
                "n_samples must be one of {ALLOWED_SAMPLE_SIZES:?}, got {}",
                self.n_samples
            )));
        }
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be at least 1".into()));
        }
        if self.max_lspi_iter == 0 {
            return Err(Error::Config("max_lspi_iter must be at least 1".into()));
        }
        if self.rollout_trials == 0 {
            return Err(Error::Config("rollout_trials must be at least 1".into()));
        }
        let g = &self.grid;
        check_positive("sigma", &g.sigma)?;
        check_positive("lambda_h", &g.lambda_h)?;
        check_positive("lambda_q", &g.lambda_q)?;
        check_positive("epsilon", &g.epsilon)?;
        for &v in g.lambda_m.iter().chain(&g.ridge) {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("grid.lambda_m and grid.ridge must be nonnegative, got {v}")));
            }
        }
        if let Some(d) = g.degree.iter().find(|d| !(1..=MAX_POLY_DEGREE).contains(*d)) {
            return Err(Error::Config(format!("polynomial degree must be in 1..={MAX_POLY_DEGREE}, got {d}")));
        }
        if let Some(c) = g.centers.iter().find(|c| !(MIN_RBF_CENTERS..=MAX_RBF_CENTERS).contains(*c)) {
            return Err(Error::Config(format!(
                "RBF centers must be in {MIN_RBF_CENTERS}..={MAX_RBF_CENTERS}, got {c}"
            )));
        }
        if g.eigen_k.contains(&0) {
            return Err(Error::Config("eigen_k values must be at least 1".into()));
        }
        Ok(())
    }

    /// Expands the grid into the settings the method actually distinguishes.
    pub fn settings(&self) -> Vec<Setting> {
        let g = self.grid.resolved(self.environment);
        let base = Hyperparams::default();
        let wrap = |kind: SolverKind, hyper: Hyperparams| Setting {
            solver: SolverConfig {
                kind,
                hyper,
                same_action_only: self.same_action_only,
                standardize_states: self.standardize(),
            },
        };
        let mut out = Vec::new();
        match self.method {
            Method::Polynomial => {
                for &degree in &g.degree {
                    for &ridge in &g.ridge {
                        out.push(wrap(SolverKind::Lstdq(BasisKind::Polynomial { degree }), Hyperparams { ridge, ..base }));
                    }
                }
            }
            Method::Rbf => {
                for &centers in &g.centers {
                    for &ridge in &g.ridge {
                        out.push(wrap(SolverKind::Lstdq(BasisKind::RbfGrid { centers }), Hyperparams { ridge, ..base }));
                    }
                }
            }
            Method::Eigenmap => {
                for &k in &g.eigen_k {
                    for &epsilon in &g.epsilon {
                        for &ridge in &g.ridge {
                            out.push(wrap(
                                SolverKind::Lstdq(BasisKind::Eigenmap { k, epsilon }),
                                Hyperparams { ridge, epsilon, ..base },
                            ));
                        }
                    }
                }
            }
            Method::RegLstd | Method::MrLstd => {
                let mr = self.method == Method::MrLstd;
                let lm: &[f64] = if mr { &g.lambda_m } else { &[0.0] };
                let eps: &[f64] = if mr { &g.epsilon } else { &g.epsilon[..1] };
                let kind = if mr { SolverKind::MrLstd } else { SolverKind::RegLstd };
                for &sigma in &g.sigma {
                    for &lambda_h in &g.lambda_h {
                        for &lambda_q in &g.lambda_q {
                            for &lambda_m in lm {
                                for &epsilon in eps {
                                    let hyper = Hyperparams { sigma, lambda_h, lambda_q, lambda_m, epsilon, ..base };
                                    out.push(wrap(kind, hyper));
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}
