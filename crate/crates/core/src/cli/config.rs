//! Run configuration: machine parameters plus experiment knobs, all in one
//! `key = value` file.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::experiment::GroundTruth;
use crate::kv::{self, Applied, ConfigError, KvSection};
use crate::magnifier::{ArbMagnifierConfig, ArithMagnifierConfig};
use crate::sim::{MicroarchConfig, OpKind};

/// Knobs that belong to the experiment drivers rather than the machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentParams {
    pub seed: u64,
    /// Magnifier rounds, or loop iterations for `repetition`. `None` picks
    /// the subcommand's default.
    pub rounds: Option<usize>,
    pub gran_ref: OpKind,
    pub gran_target: OpKind,
    pub gran_max_target_len: usize,
    pub gran_bookkeeping_per_op: usize,
    pub repetition_fix: bool,
    pub timer_granularity: u64,
    pub timer_jitter: u64,
    pub spectre_bits: usize,
    pub spectre_calibration_trials: usize,
    pub spectre_swap_warm_lines: bool,
    pub classify_truth: GroundTruth,
    pub classify_trials: usize,
    pub mp_seq_len: usize,
    pub mp_par_len: usize,
    pub mp_ways: usize,
    pub mp_trials: usize,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            seed: 0,
            rounds: None,
            gran_ref: OpKind::Add,
            gran_target: OpKind::Add,
            gran_max_target_len: 200,
            gran_bookkeeping_per_op: 3,
            repetition_fix: false,
            timer_granularity: 10_000,
            timer_jitter: 2_500,
            spectre_bits: 256,
            spectre_calibration_trials: 16,
            spectre_swap_warm_lines: false,
            classify_truth: GroundTruth::L1Hit,
            classify_trials: 1000,
            mp_seq_len: 6,
            mp_par_len: 5,
            mp_ways: 8,
            mp_trials: 100_000,
        }
    }
}

pub fn truth_name(t: GroundTruth) -> &'static str {
    match t {
        GroundTruth::L1Hit => "hit",
        GroundTruth::LlcMiss => "miss",
    }
}

pub fn parse_truth(s: &str) -> Option<GroundTruth> {
    match s {
        "hit" => Some(GroundTruth::L1Hit),
        "miss" => Some(GroundTruth::LlcMiss),
        _ => None,
    }
}

fn op_kind(key: &str, v: &str) -> Result<OpKind, String> {
    OpKind::parse(v).ok_or_else(|| format!("bad op kind `{v}` for `{key}`"))
}

impl KvSection for ExperimentParams {
    fn apply(&mut self, key: &str, v: &str) -> Result<Applied, String> {
        match key {
            "seed" => self.seed = kv::value(key, v)?,
            "rounds" => {
                self.rounds = match v {
                    "auto" => None,
                    _ => Some(kv::value(key, v)?),
                }
            }
            "gran_ref" => self.gran_ref = op_kind(key, v)?,
            "gran_target" => self.gran_target = op_kind(key, v)?,
            "gran_max_target_len" => self.gran_max_target_len = kv::value(key, v)?,
            "gran_bookkeeping_per_op" => self.gran_bookkeeping_per_op = kv::value(key, v)?,
            "repetition_fix" => self.repetition_fix = kv::boolean(key, v)?,
            "timer_granularity" => self.timer_granularity = kv::value(key, v)?,
            "timer_jitter" => self.timer_jitter = kv::value(key, v)?,
            "spectre_bits" => self.spectre_bits = kv::value(key, v)?,
            "spectre_calibration_trials" => self.spectre_calibration_trials = kv::value(key, v)?,
            "spectre_swap_warm_lines" => self.spectre_swap_warm_lines = kv::boolean(key, v)?,
            "classify_truth" => {
                self.classify_truth = parse_truth(v).ok_or_else(|| format!("bad value `{v}` for `{key}`"))?
            }
            "classify_trials" => self.classify_trials = kv::value(key, v)?,
            "mp_seq_len" => self.mp_seq_len = kv::value(key, v)?,
            "mp_par_len" => self.mp_par_len = kv::value(key, v)?,
            "mp_ways" => self.mp_ways = kv::value(key, v)?,
            "mp_trials" => self.mp_trials = kv::value(key, v)?,
            _ => return Ok(Applied::NotMine),
        }
        Ok(Applied::Taken)
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("seed", self.seed.to_string()),
            ("rounds", self.rounds.map_or_else(|| "auto".into(), |r| r.to_string())),
            ("gran_ref", self.gran_ref.to_string()),
            ("gran_target", self.gran_target.to_string()),
            ("gran_max_target_len", self.gran_max_target_len.to_string()),
            ("gran_bookkeeping_per_op", self.gran_bookkeeping_per_op.to_string()),
            ("repetition_fix", self.repetition_fix.to_string()),
            ("timer_granularity", self.timer_granularity.to_string()),
            ("timer_jitter", self.timer_jitter.to_string()),
            ("spectre_bits", self.spectre_bits.to_string()),
            ("spectre_calibration_trials", self.spectre_calibration_trials.to_string()),
            ("spectre_swap_warm_lines", self.spectre_swap_warm_lines.to_string()),
            ("classify_truth", truth_name(self.classify_truth).into()),
            ("classify_trials", self.classify_trials.to_string()),
            ("mp_seq_len", self.mp_seq_len.to_string()),
            ("mp_par_len", self.mp_par_len.to_string()),
            ("mp_ways", self.mp_ways.to_string()),
            ("mp_trials", self.mp_trials.to_string()),
        ]
    }
}

/// Everything a subcommand reads.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunConfig {
    pub machine: MicroarchConfig,
    pub params: ExperimentParams,
    pub arb: ArbMagnifierConfig,
    pub arith: ArithMagnifierConfig,
}

impl RunConfig {
    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        let mut c = RunConfig::default();
        let entries = kv::parse(text)?;
        kv::apply_all(&entries, &mut [&mut c.machine, &mut c.params, &mut c.arb, &mut c.arith])?;
        c.machine.validate()?;
        Ok(c)
    }

    /// All keys, one per line.
    pub fn render(&self) -> String {
        kv::render(&[&self.machine, &self.params, &self.arb, &self.arith])
    }

    /// SHA-256 of the default configuration's rendering.
    pub fn default_hash() -> String {
        let digest = Sha256::digest(RunConfig::default().render().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {err}")]
    Io { path: String, err: std::io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

pub fn load_config(path: &Path) -> Result<RunConfig, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|err| LoadError::Io {
        path: path.display().to_string(),
        err,
    })?;
    Ok(RunConfig::from_kv_str(&text)?)
}

/// Written next to every CSV. Comment lines carry the provenance; the rest
/// is a config file that reproduces the run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: RunConfig,
    pub csv_path: String,
    pub version: String,
}

impl RunManifest {
    pub fn render(&self) -> String {
        format!(
            "# ilp-gadgets {}\n# subcommand = {}\n# csv = {}\n{}",
            self.version,
            self.subcommand,
            self.csv_path,
            self.config.render()
        )
    }
}
