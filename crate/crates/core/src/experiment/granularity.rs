//! Measuring a target expression against a reference path.
//!
//! The transient presence race fetches its probe only if the target path
//! finishes before the reference path resolves the branch. Sweeping the
//! target length and recording the shortest reference that still lets the
//! probe through gives the ruler's slope and granularity.

use crate::cache::{CacheConfig, CacheState, Line, ReplacementPolicy};
use crate::gadget::{build_transient_pa_race, run_race, ChainSpec, EmbeddedExpression, PathSpec, RaceOutcome};
use crate::sim::{MicroarchConfig, OpKind};

use super::ExperimentError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GranularityConfig {
    pub ref_kind: OpKind,
    pub target_kind: OpKind,
    pub max_target_len: usize,
    /// Filler ops after each reference op; they set how fast the reference
    /// path fills the ROB.
    pub bookkeeping_per_op: usize,
}

impl Default for GranularityConfig {
    fn default() -> Self {
        GranularityConfig {
            ref_kind: OpKind::Add,
            target_kind: OpKind::Add,
            max_target_len: 200,
            bookkeeping_per_op: 3,
        }
    }
}

impl GranularityConfig {
    /// Longest reference path whose ops, fillers and the branch fit in the
    /// ROB next to the head load and the extension ops.
    pub fn ref_cap(&self, m: &MicroarchConfig) -> usize {
        m.rob_size.saturating_sub(5) / (1 + self.bookkeeping_per_op)
    }

    fn check(&self) -> Result<(), ExperimentError> {
        for k in [self.ref_kind, self.target_kind] {
            if k.is_memory() || matches!(k, OpKind::Branch) {
                return Err(ExperimentError::Config(format!("`{k}` cannot form an arithmetic chain")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepPoint {
    pub target_len: usize,
    pub min_ref_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// Least-squares slope of reference length over target length, above
    /// the floor.
    pub slope: f64,
    /// Longest run of target lengths sharing one reference length, above
    /// the one-op floor.
    pub granularity: usize,
    /// Target lengths already beaten by a one-op reference. They sit below
    /// the ruler's zero and say nothing about its step.
    pub floor_run: usize,
    pub max_measurable: usize,
    /// Set when the sweep stopped because the reference path would have
    /// outgrown the ROB.
    pub rob_exceeded: Option<usize>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("target_len,min_ref_len\n");
        for p in &self.points {
            s.push_str(&format!("{},{}\n", p.target_len, p.min_ref_len));
        }
        s
    }
}

fn probe_fetched(cfg: &GranularityConfig, m: &MicroarchConfig, ref_len: usize, target_len: usize) -> Result<bool, ExperimentError> {
    let sets = 64;
    let head = Line::in_set(0, 1, sets);
    let probe = Line::in_set(1, 1, sets);
    let path_m = EmbeddedExpression::new(
        head,
        PathSpec::single("ref", ChainSpec::uniform(cfg.ref_kind, ref_len)).with_bookkeeping(cfg.bookkeeping_per_op),
    );
    let path_b = PathSpec::single("target", ChainSpec::uniform(cfg.target_kind, target_len));
    let race = build_transient_pa_race(&path_m, &path_b, probe)?;
    let mut cache = CacheState::new(CacheConfig::l1(m, sets, 8, ReplacementPolicy::TrueLru))?;
    let r = run_race(&race, m, &mut cache)?;
    Ok(r.outcome == RaceOutcome::Presence(true))
}

/// Shortest reference path, at least `from` ops long, that lets a target
/// of `target_len` ops fetch the probe.
pub fn min_ref_len(
    cfg: &GranularityConfig,
    m: &MicroarchConfig,
    target_len: usize,
    from: usize,
) -> Result<usize, ExperimentError> {
    cfg.check()?;
    let cap = cfg.ref_cap(m);
    for l in from.max(1)..=cap {
        if probe_fetched(cfg, m, l, target_len)? {
            return Ok(l);
        }
    }
    Err(ExperimentError::RobExceeded(cap + 1))
}

pub fn granularity_sweep(cfg: &GranularityConfig, m: &MicroarchConfig) -> Result<SweepReport, ExperimentError> {
    cfg.check()?;
    let mut points = Vec::new();
    let mut rob_exceeded = None;
    let mut from = 1;
    for t in 1..=cfg.max_target_len {
        // the answer never shrinks as the target grows
        match min_ref_len(cfg, m, t, from) {
            Ok(l) => {
                points.push(SweepPoint { target_len: t, min_ref_len: l });
                from = l;
            }
            Err(ExperimentError::RobExceeded(l)) => {
                rob_exceeded = Some(l);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let floor_run = points.iter().take_while(|p| p.min_ref_len == 1).count();
    let granularity = points[floor_run..]
        .chunk_by(|a, b| a.min_ref_len == b.min_ref_len)
        .map(<[_]>::len)
        .max()
        .unwrap_or(0);
    Ok(SweepReport {
        slope: slope(&points[floor_run..]),
        granularity,
        floor_run,
        max_measurable: points.last().map_or(0, |p| p.target_len),
        rob_exceeded,
        points,
    })
}

fn slope(points: &[SweepPoint]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return f64::NAN;
    }
    let mx = points.iter().map(|p| p.target_len as f64).sum::<f64>() / n;
    let my = points.iter().map(|p| p.min_ref_len as f64).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for p in points {
        let dx = p.target_len as f64 - mx;
        sxy += dx * (p.min_ref_len as f64 - my);
        sxx += dx * dx;
    }
    sxy / sxx
}
