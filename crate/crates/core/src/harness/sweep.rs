//! Many configs at once, summarized as method-by-sample-size tables.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::envs::EnvKind;
use crate::{Error, Result};

use super::config::{ExperimentConfig, Method};
use super::persist::write_run_dir;
use super::run::{run_many, MetricsRecord};

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub label: String,
    pub environment: EnvKind,
    pub method: Method,
    pub n_samples: usize,
    pub record: Option<MetricsRecord>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub entries: Vec<SweepEntry>,
    /// One CSV table per environment present.
    pub tables: Vec<(EnvKind, String)>,
}

/// Cell text: mean, `*` when some seeds failed, `FAILED` when nothing completed.
fn cell_text(e: &SweepEntry) -> String {
    match &e.record {
        Some(r) => match r.mean {
            Some(m) if r.incomplete_seeds.is_empty() => format!("{m:.2}"),
            Some(m) => format!("{m:.2}*"),
            None => "FAILED".into(),
        },
        None => "FAILED".into(),
    }
}

/// Rows are sample sizes, columns the methods present (canonical order).
pub fn render_table(entries: &[SweepEntry], env: EnvKind) -> String {
    let rows: Vec<&SweepEntry> = entries.iter().filter(|e| e.environment == env).collect();
    let methods: Vec<Method> = Method::ALL.into_iter().filter(|m| rows.iter().any(|e| e.method == *m)).collect();
    let mut grid: BTreeMap<usize, BTreeMap<Method, String>> = BTreeMap::new();
    for e in rows {
        grid.entry(e.n_samples).or_default().insert(e.method, cell_text(e));
    }
    let mut out = String::from("n_samples");
    for m in &methods {
        out.push(',');
        out.push_str(m.name());
    }
    out.push('\n');
    for (n, cells) in grid {
        out.push_str(&n.to_string());
        for m in &methods {
            out.push(',');
            out.push_str(cells.get(m).map(String::as_str).unwrap_or(""));
        }
        out.push('\n');
    }
    out
}

pub fn sweep(configs: &[ExperimentConfig], jobs: usize) -> Result<SweepOutput> {
    if configs.is_empty() {
        return Err(Error::Empty("sweep configs"));
    }
    let records = run_many(configs, jobs)?;
    let entries: Vec<SweepEntry> = configs
        .iter()
        .zip(records)
        .map(|(cfg, r)| {
            let (record, error) = match r {
                Ok(rec) => (Some(rec), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SweepEntry {
                label: cfg.label(),
                environment: cfg.environment,
                method: cfg.method,
                n_samples: cfg.n_samples,
                record,
                error,
            }
        })
        .collect();
    let mut envs: Vec<EnvKind> = entries.iter().map(|e| e.environment).collect();
    envs.sort_by_key(|e| e.name());
    envs.dedup();
    let tables = envs.into_iter().map(|env| (env, render_table(&entries, env))).collect();
    Ok(SweepOutput { entries, tables })
}

/// Writes `table_<env>.csv`, `results.json` and one run directory per config.
pub fn write_sweep(configs: &[ExperimentConfig], out: &SweepOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (env, table) in &out.tables {
        fs::write(dir.join(format!("table_{}.csv", env.name())), table)?;
    }
    let mut f = fs::File::create(dir.join("results.json"))?;
    serde_json::to_writer_pretty(&mut f, &out.entries)?;
    writeln!(f)?;
    for (cfg, e) in configs.iter().zip(&out.entries) {
        if let Some(rec) = &e.record {
            write_run_dir(cfg, rec, &dir.join("runs").join(&e.label))?;
        }
    }
    Ok(())
}

/// Loads every `*.toml` in a directory, sorted by file name.
pub fn load_config_dir(dir: &Path) -> Result<Vec<ExperimentConfig>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!("no .toml configs in {}", dir.display())));
    }
    paths.iter().map(|p| ExperimentConfig::load(p)).collect()
}
