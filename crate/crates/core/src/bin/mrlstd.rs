use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mrlstd::envs::two_room::TwoRoom;
use mrlstd::harness::config::FAST_SEEDS;
use mrlstd::harness::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "mrlstd", version, about = "Manifold-regularized kernel LSTD experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    /// Override the number of seeds in the config(s).
    #[arg(long)]
    seeds: Option<usize>,
    /// Use 20 seeds.
    #[arg(long, conflicts_with = "seeds")]
    fast: bool,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl RunFlags {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if self.fast {
            cfg.seeds = FAST_SEEDS;
        } else if let Some(s) = self.seeds {
            cfg.seeds = s;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run every .toml config in a directory and emit method-by-size tables.
    Sweep {
        dir: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Recompute aggregates of an existing run directory.
    Report { run_dir: PathBuf },
    /// Write exact two-room value-iteration and Q^π tables.
    Oracle {
        #[arg(long, default_value = "oracle")]
        out_dir: PathBuf,
        /// Seed of the random policy whose Q^π is written.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cmd: Command) -> mrlstd::Result<()> {
    match cmd {
        Command::Run { config, flags } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            flags.apply(&mut cfg);
            let record = harness::run_experiment(&cfg, flags.jobs)?;
            harness::write_run_dir(&cfg, &record, &flags.out_dir)?;
            print!("{}", harness::persist::summary_text(&record));
        }
        Command::Sweep { dir, flags } => {
            let mut configs = harness::load_config_dir(&dir)?;
            configs.iter_mut().for_each(|c| flags.apply(c));
            let out = harness::sweep(&configs, flags.jobs)?;
            harness::write_sweep(&configs, &out, &flags.out_dir)?;
            for (env, table) in &out.tables {
                println!("{}:\n{table}", env.name());
            }
        }
        Command::Report { run_dir } => {
            let record = harness::report(&run_dir)?;
            print!("{}", harness::persist::summary_text(&record));
        }
        Command::Oracle { out_dir, seed } => {
            harness::write_oracle(&TwoRoom::default(), seed, &out_dir)?;
            println!("wrote {}", out_dir.display());
        }
    }
    Ok(())
}
