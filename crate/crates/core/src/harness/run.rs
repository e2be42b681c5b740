//! Seed-replicated grid runs and their aggregation.

use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envs::cartpole::{collect_episodes, CartPoleParams};
use crate::envs::rng::{stream_rng, STREAM_DATA, STREAM_POLICY, STREAM_ROLLOUT};
use crate::envs::two_room::{collect_uniform, OptimalTable, TwoRoom};
use crate::envs::{Dataset, EnvKind};
use crate::lspi::{evaluate_rollout, lspi_run, policy_mismatch_count};
use crate::policy::{Policy, RandomPolicy};
use crate::{Error, Result};

use super::config::{ExperimentConfig, Method, Setting};

/// 64-bit FNV-1a, used for config and dataset fingerprints.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn config_fingerprint(cfg: &ExperimentConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    format!("{:016x}", fnv1a(json.as_bytes()))
}

pub fn dataset_fingerprint(d: &Dataset) -> String {
    let mut bytes = Vec::with_capacity(d.len() * 64);
    for s in d.samples() {
        for v in s.s.iter().chain(std::iter::once(&s.r)).chain(&s.s_next) {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes.extend_from_slice(&(s.a as u64).to_le_bytes());
        bytes.push(u8::from(s.terminal));
    }
    format!("{:016x}", fnv1a(&bytes))
}

/// Collects the dataset for one seed; every method and setting sees the same one.
pub fn collect_dataset(env: EnvKind, n: usize, seed: u64) -> Dataset {
    let mut rng = stream_rng(seed, STREAM_DATA);
    match env {
        EnvKind::TwoRoom => collect_uniform(&TwoRoom::default(), n, &mut rng, seed),
        EnvKind::CartPole => collect_episodes(&CartPoleParams::default(), n, &mut rng, seed),
    }
}

/// The uniform-random starting policy of LSPI for one seed.
pub fn initial_policy(env: EnvKind, seed: u64) -> RandomPolicy {
    let key = stream_rng(seed, STREAM_POLICY).next_u64();
    RandomPolicy::new(key, env.mdp_spec().num_actions)
}

/// Whether larger metric values are better (rollout steps) or worse (mismatches).
pub fn higher_is_better(env: EnvKind) -> bool {
    env == EnvKind::CartPole
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub dataset_fingerprint: String,
    /// Best metric over the LSPI iterates; `None` if the seed failed.
    pub best: Option<f64>,
    pub best_iteration: Option<usize>,
    pub per_iteration: Vec<f64>,
    pub converged_at: Option<usize>,
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingResult {
    pub index: usize,
    pub description: String,
    pub setting: Setting,
    pub seeds: Vec<SeedResult>,
    pub completed: usize,
    pub failed: usize,
    /// Mean over completed seeds of the per-seed best.
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    /// Best iterate of the seed-averaged learning curve.
    pub best_of_mean_curve: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub label: String,
    pub fingerprint: String,
    pub environment: EnvKind,
    pub method: Method,
    pub n_samples: usize,
    pub higher_is_better: bool,
    pub settings: Vec<SettingResult>,
    /// Index into `settings` of the best-mean setting.
    pub best_setting: Option<usize>,
    /// Per-seed values of the best setting (completed seeds only).
    pub per_seed: Vec<f64>,
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    /// Seeds of the best setting that failed.
    pub incomplete_seeds: Vec<u64>,
}

impl MetricsRecord {
    pub fn best(&self) -> Option<&SettingResult> {
        self.best_setting.map(|i| &self.settings[i])
    }

    pub fn is_complete(&self) -> bool {
        self.best_setting.is_some() && self.incomplete_seeds.is_empty()
    }
}

pub fn mean_and_stderr(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    Some((mean, (var / k).sqrt()))
}

fn better(higher: bool, a: f64, b: f64) -> bool {
    if higher {
        a > b
    } else {
        a < b
    }
}

/// Index of the best value; earliest on ties.
fn best_index(values: &[f64], higher: bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| better(higher, v, values[b])) {
            best = Some(i);
        }
    }
    best
}

/// Per-iteration mean over seeds; shorter (converged) runs hold their last value.
fn mean_curve(seeds: &[SeedResult]) -> Vec<f64> {
    let curves: Vec<&Vec<f64>> = seeds.iter().filter(|s| s.best.is_some()).map(|s| &s.per_iteration).collect();
    let len = curves.iter().map(|c| c.len()).max().unwrap_or(0);
    (0..len)
        .map(|t| {
            let sum: f64 = curves.iter().map(|c| c[t.min(c.len() - 1)]).sum();
            sum / curves.len() as f64
        })
        .collect()
}

pub fn aggregate_setting(index: usize, setting: Setting, seeds: Vec<SeedResult>, higher: bool) -> SettingResult {
    let values: Vec<f64> = seeds.iter().filter_map(|s| s.best).collect();
    let stats = mean_and_stderr(&values);
    let curve = mean_curve(&seeds);
    let best_of_mean_curve = best_index(&curve, higher).map(|i| curve[i]);
    SettingResult {
        index,
        description: setting.describe(),
        setting,
        completed: values.len(),
        failed: seeds.len() - values.len(),
        seeds,
        mean: stats.map(|s| s.0),
        stderr: stats.map(|s| s.1),
        best_of_mean_curve,
    }
}

/// Builds the record from per-seed results (in setting order). This is the
/// single reduction used both after a run and when re-aggregating from disk.
pub fn aggregate(cfg: &ExperimentConfig, per_setting: Vec<Vec<SeedResult>>) -> Result<MetricsRecord> {
    let settings = cfg.settings();
    if settings.len() != per_setting.len() {
        return Err(Error::DimensionMismatch { expected: settings.len(), got: per_setting.len() });
    }
    let higher = higher_is_better(cfg.environment);
    let results: Vec<SettingResult> = settings
        .into_iter()
        .zip(per_setting)
        .enumerate()
        .map(|(i, (s, seeds))| aggregate_setting(i, s, seeds, higher))
        .collect();
    // rank fully completed settings first, then by mean
    let mut best_setting: Option<usize> = None;
    for r in &results {
        let Some(m) = r.mean else { continue };
        let replace = match best_setting {
            None => true,
            Some(b) => {
                let cur = &results[b];
                let cur_mean = cur.mean.expect("ranked settings have a mean");
                (r.failed == 0 && cur.failed > 0) || ((r.failed == 0) == (cur.failed == 0) && better(higher, m, cur_mean))
            }
        };
        if replace {
            best_setting = Some(r.index);
        }
    }
    let (per_seed, mean, stderr, incomplete_seeds) = match best_setting {
        Some(b) => {
            let r = &results[b];
            (
                r.seeds.iter().filter_map(|s| s.best).collect(),
                r.mean,
                r.stderr,
                r.seeds.iter().filter(|s| s.best.is_none()).map(|s| s.seed).collect(),
            )
        }
        None => (Vec::new(), None, None, cfg.seed_list()),
    };
    Ok(MetricsRecord {
        label: cfg.label(),
        fingerprint: config_fingerprint(cfg),
        environment: cfg.environment,
        method: cfg.method,
        n_samples: cfg.n_samples,
        higher_is_better: higher,
        settings: results,
        best_setting,
        per_seed,
        mean,
        stderr,
        incomplete_seeds,
    })
}

/// Scores policies for one environment.
pub enum Scorer {
    TwoRoom(OptimalTable),
    CartPole { params: CartPoleParams, trials: usize },
}

impl Scorer {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        match cfg.environment {
            EnvKind::TwoRoom => Scorer::TwoRoom(TwoRoom::default().optimal_policy()),
            EnvKind::CartPole => Scorer::CartPole { params: CartPoleParams::default(), trials: cfg.rollout_trials },
        }
    }

    /// Rollout scoring reuses the same start states for every policy of a seed.
    pub fn score(&self, policy: &dyn Policy, seed: u64) -> Result<f64> {
        match self {
            Scorer::TwoRoom(table) => Ok(policy_mismatch_count(policy, table) as f64),
            Scorer::CartPole { params, trials } => {
                let mut rng = stream_rng(seed, STREAM_ROLLOUT);
                evaluate_rollout(policy, params, *trials, params.max_episode_steps, &mut rng)
            }
        }
    }
}

/// Runs LSPI for one (setting, seed) cell and scores every iterate.
pub fn run_cell(
    cfg: &ExperimentConfig,
    setting: &Setting,
    dataset: &Dataset,
    scorer: &Scorer,
    seed: u64,
) -> SeedResult {
    let start = Instant::now();
    let higher = higher_is_better(cfg.environment);
    let init = initial_policy(cfg.environment, seed);
    let mut score_err: Option<String> = None;
    let mut metric = |p: &dyn Policy| match scorer.score(p, seed) {
        Ok(v) => v,
        Err(e) => {
            score_err.get_or_insert_with(|| e.to_string());
            f64::NAN
        }
    };
    let outcome = lspi_run(dataset, &setting.solver, &init, cfg.max_lspi_iter, Some(&mut metric));
    let mut res = SeedResult {
        seed,
        dataset_fingerprint: dataset_fingerprint(dataset),
        best: None,
        best_iteration: None,
        per_iteration: Vec::new(),
        converged_at: None,
        error: None,
        wall_ms: 0.0,
    };
    match outcome {
        Err(e) => res.error = Some(e.to_string()),
        Ok(run) => {
            res.per_iteration = run.iterates.iter().map(|it| it.metric.unwrap_or(f64::NAN)).collect();
            res.converged_at = run.converged_at;
            res.error = score_err.or(run.aborted);
            if res.per_iteration.iter().all(|v| v.is_finite()) {
                res.best_iteration = best_index(&res.per_iteration, higher);
                res.best = res.best_iteration.map(|i| res.per_iteration[i]);
            }
        }
    }
    res.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    log::info!(
        "{} [{}] seed {seed}: best {:?} after {} iterations ({:.0} ms)",
        cfg.label(),
        setting.describe(),
        res.best,
        res.per_iteration.len(),
        res.wall_ms
    );
    res
}

pub(crate) fn build_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    let jobs = if jobs == 0 { std::thread::available_parallelism().map_or(1, |n| n.get()) } else { jobs };
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))
}

/// Runs every config over all its (setting × seed) cells on one worker pool
/// of `jobs` threads (0 = one per core). Cells are seeded independently, so
/// the results do not depend on scheduling.
pub fn run_many(configs: &[ExperimentConfig], jobs: usize) -> Result<Vec<Result<MetricsRecord>>> {
    let pool = build_pool(jobs)?;
    let prepared: Vec<Result<(Vec<Setting>, Vec<Dataset>, Scorer)>> = configs
        .iter()
        .map(|cfg| {
            cfg.validate()?;
            let datasets = cfg.seed_list().iter().map(|&s| collect_dataset(cfg.environment, cfg.n_samples, s)).collect();
            Ok((cfg.settings(), datasets, Scorer::new(cfg)))
        })
        .collect();
    let mut cells = Vec::new();
    for (c, p) in prepared.iter().enumerate() {
        if let Ok((settings, datasets, _)) = p {
            for s in 0..settings.len() {
                for d in 0..datasets.len() {
                    cells.push((c, s, d));
                }
            }
        }
    }
    let results: Vec<SeedResult> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(c, s, d)| {
                let (settings, datasets, scorer) = prepared[c].as_ref().expect("only valid configs have cells");
                run_cell(&configs[c], &settings[s], &datasets[d], scorer, configs[c].seed_list()[d])
            })
            .collect()
    });
    let mut it = results.into_iter();
    let mut out = Vec::with_capacity(configs.len());
    for (cfg, p) in configs.iter().zip(prepared) {
        match p {
            Err(e) => out.push(Err(e)),
            Ok((settings, datasets, _)) => {
                let per_setting =
                    (0..settings.len()).map(|_| it.by_ref().take(datasets.len()).collect()).collect();
                out.push(aggregate(cfg, per_setting));
            }
        }
    }
    Ok(out)
}

/// Runs one config: collects data per seed, runs LSPI for every grid setting,
/// scores each iterate and selects the best-mean setting.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<MetricsRecord> {
    run_many(std::slice::from_ref(cfg), jobs)?.pop().expect("one config in, one record out")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stderr_small_cases() {
        assert_eq!(mean_and_stderr(&[]), None);
        assert_eq!(mean_and_stderr(&[3.0]), Some((3.0, 0.0)));
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        // sample sd = sqrt(5/3)
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn best_index_respects_direction_and_ties() {
        assert_eq!(best_index(&[3.0, 1.0, 1.0, 2.0], false), Some(1));
        assert_eq!(best_index(&[3.0, 5.0, 5.0], true), Some(1));
        assert_eq!(best_index(&[], true), None);
    }

    #[test]
    fn mean_curve_holds_last_value() {
        let mk = |v: Vec<f64>| SeedResult {
            seed: 0,
            dataset_fingerprint: String::new(),
            best: Some(0.0),
            best_iteration: None,
            per_iteration: v,
            converged_at: None,
            error: None,
            wall_ms: 0.0,
        };
        let c = mean_curve(&[mk(vec![4.0, 2.0]), mk(vec![6.0, 4.0, 0.0])]);
        assert_eq!(c, vec![5.0, 3.0, 1.0]);
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
    }
}
