//! Telling an L1 hit from a memory access with one transient race.
//!
//! The target path is a single load of the address under test, raced
//! against a MUL chain whose length sits between the hit and miss break
//! points. The probe is fetched only when the load hits.

use crate::cache::{CacheConfig, CacheState, Line, ReplacementPolicy};
use crate::gadget::{build_transient_pa_race, run_race, ChainSpec, EmbeddedExpression, PathSpec, RaceOutcome};
use crate::sim::{MicroarchConfig, OpKind};

use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundTruth {
    L1Hit,
    LlcMiss,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierReport {
    pub ref_len: usize,
    pub trials: usize,
    pub correct: usize,
    pub accuracy: f64,
}

const SETS: usize = 64;

fn probe_fetched(m: &MicroarchConfig, truth: GroundTruth, ref_len: usize) -> Result<bool, ExperimentError> {
    let head = Line::in_set(0, 1, SETS);
    let target = Line::in_set(1, 1, SETS);
    let probe = Line::in_set(2, 1, SETS);
    let mut cache = CacheState::new(CacheConfig::two_level(m, ReplacementPolicy::TrueLru))?;
    if truth == GroundTruth::L1Hit {
        cache.access(target);
    }
    let path_m = EmbeddedExpression::new(head, PathSpec::single("ref", ChainSpec::uniform(OpKind::Mul, ref_len)));
    let path_b = PathSpec::single("target", ChainSpec::loads(&[target]));
    let race = build_transient_pa_race(&path_m, &path_b, probe)?;
    Ok(run_race(&race, m, &mut cache)?.outcome == RaceOutcome::Presence(true))
}

/// Picks the MUL count halfway between the shortest reference that lets a
/// hit through and the shortest that lets a miss through.
pub fn calibrate_classifier(m: &MicroarchConfig) -> Result<usize, ExperimentError> {
    if m.l1_latency >= m.dram_latency {
        return Err(ExperimentError::CalibrationImpossible(format!(
            "L1 latency {} is not below memory latency {}",
            m.l1_latency, m.dram_latency
        )));
    }
    let quiet = MicroarchConfig {
        load_jitter: 0,
        ..m.clone()
    };
    let cap = m.rob_size.saturating_sub(5);
    let first = |truth| -> Result<Option<usize>, ExperimentError> {
        for l in 1..=cap {
            if probe_fetched(&quiet, truth, l)? {
                return Ok(Some(l));
            }
        }
        Ok(None)
    };
    let hit = first(GroundTruth::L1Hit)?;
    let miss = first(GroundTruth::LlcMiss)?;
    match (hit, miss) {
        (Some(h), Some(ms)) if h < ms => Ok((h + ms) / 2),
        (Some(h), None) => Ok((h + cap + 1) / 2),
        _ => Err(ExperimentError::CalibrationImpossible(format!(
            "hit break point {hit:?}, miss break point {miss:?}"
        ))),
    }
}

/// Classifies `trials` accesses whose true state is `truth`. Trial `i`
/// draws its load noise from `seed + i`.
pub fn hit_miss_classifier(
    truth: GroundTruth,
    trials: usize,
    m: &MicroarchConfig,
    seed: u64,
) -> Result<ClassifierReport, ExperimentError> {
    let ref_len = calibrate_classifier(m)?;
    let mut correct = 0;
    for i in 0..trials {
        let noisy = MicroarchConfig {
            noise_seed: seed.wrapping_add(i as u64),
            ..m.clone()
        };
        let said_hit = probe_fetched(&noisy, truth, ref_len)?;
        correct += (said_hit == (truth == GroundTruth::L1Hit)) as usize;
    }
    Ok(ClassifierReport {
        ref_len,
        trials,
        correct,
        accuracy: if trials == 0 { 0.0 } else { correct as f64 / trials as f64 },
    })
}
