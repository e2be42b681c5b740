//! Experiment orchestration: TOML configs, grid search over seeds, metric
//! aggregation, run directories and sweep tables.

pub mod config;
pub mod oracle;
pub mod persist;
pub mod run;
pub mod sweep;

pub use config::{ExperimentConfig, Grid, Method, Setting};
pub use oracle::write_oracle;
pub use persist::{report, write_run_dir};
pub use run::{run_experiment, run_many, MetricsRecord, SeedResult, SettingResult};
pub use sweep::{load_config_dir, sweep, write_sweep, SweepOutput};
