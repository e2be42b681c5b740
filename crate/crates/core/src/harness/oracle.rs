//! Exact two-room reference tables for inspection.

use std::path::Path;

use crate::envs::two_room::{Cell, TwoRoom, NUM_ACTIONS};
use crate::policy::{Policy, RandomPolicy};
use crate::Result;

fn q_rows(q: &[[f64; NUM_ACTIONS]]) -> Vec<Vec<String>> {
    Cell::all()
        .map(|c| {
            let mut row = vec![c.x.to_string(), c.y.to_string()];
            row.extend(q[c.index()].iter().map(|v| v.to_string()));
            row
        })
        .collect()
}

fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `optimal.csv` (Q*, V*, optimal action sets), `q_pi_optimal.csv`
/// and `q_pi_random.csv` (exact Q^π of the greedy-optimal and of a seeded
/// random policy).
pub fn write_oracle(env: &TwoRoom, random_seed: u64, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let table = env.optimal_policy();
    let rows: Vec<Vec<String>> = Cell::all()
        .map(|c| {
            let q = table.q[c.index()];
            let v = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let acts: Vec<String> = table.optimal_actions(c).iter().map(|a| a.to_string()).collect();
            let mut row = vec![c.x.to_string(), c.y.to_string(), v.to_string(), acts.join(";")];
            row.extend(q.iter().map(|x| x.to_string()));
            row
        })
        .collect();
    write_rows(
        &dir.join("optimal.csv"),
        &["x", "y", "v", "optimal_actions", "q_up", "q_right", "q_down", "q_left"],
        &rows,
    )?;
    let q_header = ["x", "y", "q_up", "q_right", "q_down", "q_left"];
    let greedy = |s: &[f64]| {
        let c = Cell::from_state(s).expect("grid state");
        table.optimal_actions(c)[0]
    };
    write_rows(&dir.join("q_pi_optimal.csv"), &q_header, &q_rows(&env.exact_q_pi(&greedy)?))?;
    let random = RandomPolicy::new(random_seed, NUM_ACTIONS);
    write_rows(&dir.join("q_pi_random.csv"), &q_header, &q_rows(&env.exact_q_pi(&random as &dyn Policy)?))?;
    log::info!("value iteration residual {:.3e}", table.residual);
    Ok(())
}
