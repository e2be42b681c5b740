//! Benchmark MDPs, batch data collection and exact tabular oracles.

pub mod cartpole;
pub mod rng;
pub mod two_room;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::kernel::PointSet;
use crate::{Error, Result};

pub use cartpole::{cartpole_step, collect_episodes, CartPole, CartPoleParams};
pub use two_room::{collect_exhaustive, collect_uniform, Cell, OptimalTable, TwoRoom};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdpSpec {
    pub state_dim: usize,
    pub num_actions: usize,
    pub gamma: f64,
    pub max_episode_steps: Option<usize>,
}

impl MdpSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParameter(format!("gamma must be in (0, 1), got {}", self.gamma)));
        }
        if self.num_actions < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 actions, got {}", self.num_actions)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    TwoRoom,
    CartPole,
}

impl EnvKind {
    pub fn mdp_spec(self) -> MdpSpec {
        match self {
            EnvKind::TwoRoom => TwoRoom::default().mdp_spec(),
            EnvKind::CartPole => CartPoleParams::default().mdp_spec(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::TwoRoom => "two_room",
            EnvKind::CartPole => "cart_pole",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectionMode {
    /// Uniform over states and actions.
    Uniform,
    /// Random-action episodes from perturbed starts.
    Episodes,
    /// Every state-action pair with outcomes replicated in proportion to
    /// their transition probabilities.
    Exhaustive,
}

/// One transition `(s, a, r, s')`.
///
/// `terminal` marks transitions that ended the episode by failure; the value
/// of `s'` is then zero. Time-limit truncation is not terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub s: Vec<f64>,
    pub a: usize,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub env: EnvKind,
    pub mode: CollectionMode,
    pub seed: u64,
    pub n: usize,
}

/// Fixed batch of transitions plus the stacked inputs `X = [(s_i, a_i)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    inputs: PointSet,
    spec: MdpSpec,
    meta: DatasetMeta,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, spec: MdpSpec, env: EnvKind, mode: CollectionMode, seed: u64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let mut inputs = PointSet::with_capacity(spec.state_dim, samples.len());
        for s in &samples {
            if s.a >= spec.num_actions {
                return Err(Error::InvalidAction { action: s.a, num_actions: spec.num_actions });
            }
            if s.s_next.len() != spec.state_dim {
                return Err(Error::DimensionMismatch { expected: spec.state_dim, got: s.s_next.len() });
            }
            inputs.push(&s.s, s.a)?;
        }
        let meta = DatasetMeta { env, mode, seed, n: samples.len() };
        Ok(Self { samples, inputs, spec, meta })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// `X`
    pub fn inputs(&self) -> &PointSet {
        &self.inputs
    }

    pub fn spec(&self) -> &MdpSpec {
        &self.spec
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    /// `R`
    pub fn rewards(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.r).collect()
    }

    /// Per-sample bootstrap weight: `1` for ordinary transitions, `0` for terminal ones.
    pub fn continuation(&self) -> Vec<f64> {
        self.samples.iter().map(|s| if s.terminal { 0.0 } else { 1.0 }).collect()
    }

    /// `X'`: next states paired with the actions `policy` takes there.
    pub fn next_inputs(&self, policy: &dyn crate::policy::Policy) -> PointSet {
        let mut out = PointSet::with_capacity(self.spec.state_dim, self.len());
        for s in &self.samples {
            let a = policy.action(&s.s_next);
            // dimensions were validated in `new`
            out.push(&s.s_next, a).expect("state dimension");
        }
        out
    }

    /// Returns a copy with every reward multiplied by `c`.
    pub fn scale_rewards(&self, c: f64) -> Dataset {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.r *= c;
        }
        out
    }

    fn meta_path(path: &Path) -> PathBuf {
        let mut p = path.as_os_str().to_owned();
        p.push(".meta.toml");
        PathBuf::from(p)
    }

    /// Writes `path` as CSV (`s0..,a,r,next_s0..,done`) and a
    /// `<path>.meta.toml` sidecar.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let d = self.spec.state_dim;
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        let mut header: Vec<String> = (0..d).map(|k| format!("s{k}")).collect();
        header.push("a".into());
        header.push("r".into());
        header.extend((0..d).map(|k| format!("next_s{k}")));
        header.push("done".into());
        w.write_record(&header)?;
        for s in &self.samples {
            let mut rec: Vec<String> = s.s.iter().map(|v| v.to_string()).collect();
            rec.push(s.a.to_string());
            rec.push(s.r.to_string());
            rec.extend(s.s_next.iter().map(|v| v.to_string()));
            rec.push(u8::from(s.terminal).to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        let meta = toml::to_string(&self.meta).map_err(|e| Error::Parse(e.to_string()))?;
        let mut f = File::create(Self::meta_path(path))?;
        f.write_all(meta.as_bytes())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Dataset> {
        let meta_text = std::fs::read_to_string(Self::meta_path(path))?;
        let meta: DatasetMeta = toml::from_str(&meta_text).map_err(|e| Error::Parse(e.to_string()))?;
        let spec = meta.env.mdp_spec();
        let d = spec.state_dim;
        let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
        let width = r.headers()?.len();
        if width != 2 * d + 3 {
            return Err(Error::Parse(format!("expected {} columns, found {width}", 2 * d + 3)));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
        let mut samples = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let s = (0..d).map(|k| num(&rec[k])).collect::<Result<Vec<_>>>()?;
            let a = rec[d].trim().parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?;
            let reward = num(&rec[d + 1])?;
            let s_next = (0..d).map(|k| num(&rec[d + 2 + k])).collect::<Result<Vec<_>>>()?;
            let terminal = match rec[2 * d + 2].trim() {
                "0" => false,
                "1" => true,
                other => return Err(Error::Parse(format!("bad done flag {other:?}"))),
            };
            samples.push(Sample { s, a, r: reward, s_next, terminal });
        }
        if samples.len() != meta.n {
            return Err(Error::Parse(format!("metadata says n = {}, file has {}", meta.n, samples.len())));
        }
        Dataset::new(samples, spec, meta.env, meta.mode, meta.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::rng::{stream_rng, STREAM_DATA};
    use proptest::prelude::*;

    #[test]
    fn mdp_spec_validation() {
        assert!(EnvKind::TwoRoom.mdp_spec().validate().is_ok());
        assert!(EnvKind::CartPole.mdp_spec().validate().is_ok());
        let mut bad = EnvKind::TwoRoom.mdp_spec();
        bad.gamma = 1.0;
        assert!(bad.validate().is_err());
        bad.gamma = 0.5;
        bad.num_actions = 1;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn empty_dataset_rejected() {
        let spec = EnvKind::TwoRoom.mdp_spec();
        assert!(Dataset::new(vec![], spec, EnvKind::TwoRoom, CollectionMode::Uniform, 0).is_err());
    }

    #[test]
    fn bad_action_rejected() {
        let spec = EnvKind::TwoRoom.mdp_spec();
        let s = Sample { s: vec![0.0, 0.0], a: 4, r: 0.0, s_next: vec![0.0, 0.0], terminal: false };
        assert!(matches!(
            Dataset::new(vec![s], spec, EnvKind::TwoRoom, CollectionMode::Uniform, 0),
            Err(Error::InvalidAction { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn csv_round_trip(seed in any::<u64>(), n in 1usize..60, cart in any::<bool>()) {
            let mut rng = stream_rng(seed, STREAM_DATA);
            let ds = if cart {
                collect_episodes(&CartPoleParams::default(), n, &mut rng, seed)
            } else {
                collect_uniform(&TwoRoom::default(), n, &mut rng, seed)
            };
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("data.csv");
            ds.write_csv(&path).unwrap();
            let back = Dataset::read_csv(&path).unwrap();
            prop_assert_eq!(back, ds);
        }
    }
}
