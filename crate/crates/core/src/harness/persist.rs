//! Run-directory layout and re-aggregation.
//!
//! ```text
//! <dir>/config.toml     config snapshot
//! <dir>/per_seed.csv    one row per (setting, seed)
//! <dir>/aggregate.csv   one row per setting
//! <dir>/record.json     the full metrics record
//! <dir>/timing.csv      wall-clock per cell (kept apart so the rest is reproducible)
//! <dir>/summary.txt     plain-text summary
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::{Error, Result};

use super::config::ExperimentConfig;
use super::run::{aggregate, MetricsRecord, SeedResult};

const PER_SEED_HEADER: [&str; 9] = [
    "setting",
    "seed",
    "dataset_fingerprint",
    "best",
    "best_iteration",
    "iterations",
    "converged_at",
    "error",
    "per_iteration",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt<T: std::str::FromStr>(field: &str, what: &str) -> Result<Option<T>> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| Error::Parse(format!("bad {what} value {field:?}")))
}

pub fn write_per_seed(record: &MetricsRecord, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(PER_SEED_HEADER)?;
    for s in &record.settings {
        for r in &s.seeds {
            let curve: Vec<String> = r.per_iteration.iter().map(|v| v.to_string()).collect();
            w.write_record([
                s.index.to_string(),
                r.seed.to_string(),
                r.dataset_fingerprint.clone(),
                opt(r.best),
                opt(r.best_iteration),
                r.per_iteration.len().to_string(),
                opt(r.converged_at),
                r.error.clone().unwrap_or_default(),
                curve.join(";"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads per-seed rows grouped by setting index.
pub fn read_per_seed(path: &Path, num_settings: usize) -> Result<Vec<Vec<SeedResult>>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out: Vec<Vec<SeedResult>> = vec![Vec::new(); num_settings];
    for row in r.records() {
        let row = row?;
        if row.len() != PER_SEED_HEADER.len() {
            return Err(Error::Parse(format!("per-seed row has {} fields", row.len())));
        }
        let setting: usize = parse_opt(&row[0], "setting")?.ok_or_else(|| Error::Parse("missing setting".into()))?;
        if setting >= num_settings {
            return Err(Error::Parse(format!("setting index {setting} outside the config grid")));
        }
        let per_iteration = if row[8].is_empty() {
            Vec::new()
        } else {
            row[8]
                .split(';')
                .map(|v| v.parse::<f64>().map_err(|_| Error::Parse(format!("bad metric {v:?}"))))
                .collect::<Result<Vec<_>>>()?
        };
        out[setting].push(SeedResult {
            seed: parse_opt(&row[1], "seed")?.ok_or_else(|| Error::Parse("missing seed".into()))?,
            dataset_fingerprint: row[2].to_string(),
            best: parse_opt(&row[3], "best")?,
            best_iteration: parse_opt(&row[4], "best_iteration")?,
            per_iteration,
            converged_at: parse_opt(&row[6], "converged_at")?,
            error: if row[7].is_empty() { None } else { Some(row[7].to_string()) },
            wall_ms: 0.0,
        });
    }
    Ok(out)
}

pub fn write_aggregate(record: &MetricsRecord, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["setting", "description", "completed", "failed", "mean", "stderr", "best_of_mean_curve", "selected"])?;
    for s in &record.settings {
        w.write_record([
            s.index.to_string(),
            s.description.clone(),
            s.completed.to_string(),
            s.failed.to_string(),
            opt(s.mean),
            opt(s.stderr),
            opt(s.best_of_mean_curve),
            (record.best_setting == Some(s.index)).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn summary_text(record: &MetricsRecord) -> String {
    let metric = if record.higher_is_better { "average steps" } else { "policy mismatches" };
    let mut s = format!(
        "{}\nenvironment: {}\nmethod: {}\nn_samples: {}\nconfig fingerprint: {}\nsettings: {}\n",
        record.label,
        record.environment.name(),
        record.method.name(),
        record.n_samples,
        record.fingerprint,
        record.settings.len()
    );
    match record.best() {
        None => s.push_str("no setting completed any seed\n"),
        Some(b) => {
            s.push_str(&format!("best setting: {}\n", b.description));
            s.push_str(&format!(
                "{metric}: {:.4} ± {:.4} (per-seed best over iterations, {} seeds)\n",
                b.mean.unwrap_or(f64::NAN),
                b.stderr.unwrap_or(f64::NAN),
                b.completed
            ));
            s.push_str(&format!("best of seed-averaged curve: {:.4}\n", b.best_of_mean_curve.unwrap_or(f64::NAN)));
            if !record.incomplete_seeds.is_empty() {
                s.push_str(&format!("incomplete seeds: {:?}\n", record.incomplete_seeds));
            }
        }
    }
    s
}

/// Writes the reproducible part of a run directory (everything but timing).
fn write_outputs(record: &MetricsRecord, dir: &Path) -> Result<()> {
    write_aggregate(record, &dir.join("aggregate.csv"))?;
    let mut f = fs::File::create(dir.join("record.json"))?;
    serde_json::to_writer_pretty(&mut f, record)?;
    writeln!(f)?;
    fs::write(dir.join("summary.txt"), summary_text(record))?;
    Ok(())
}

pub fn write_run_dir(cfg: &ExperimentConfig, record: &MetricsRecord, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml_string()?)?;
    write_per_seed(record, &dir.join("per_seed.csv"))?;
    let mut w = csv::Writer::from_path(dir.join("timing.csv"))?;
    w.write_record(["setting", "seed", "wall_ms"])?;
    for s in &record.settings {
        for r in &s.seeds {
            w.write_record([s.index.to_string(), r.seed.to_string(), format!("{:.3}", r.wall_ms)])?;
        }
    }
    w.flush()?;
    write_outputs(record, dir)
}

/// Recomputes aggregates of a run directory from its config and per-seed CSV
/// and rewrites the derived files.
pub fn report(dir: &Path) -> Result<MetricsRecord> {
    let cfg = ExperimentConfig::load(&dir.join("config.toml"))?;
    let per_setting = read_per_seed(&dir.join("per_seed.csv"), cfg.settings().len())?;
    let record = aggregate(&cfg, per_setting)?;
    write_outputs(&record, dir)?;
    Ok(record)
}
