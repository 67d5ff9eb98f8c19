//! Flush, load, reload in a loop, comparing same-address and
//! different-address loads.
//!
//! Repeating the loop does not grow the signal: whichever stage misses,
//! one stage per iteration pays the miss, so the totals cancel. Running
//! the load inside a race against a longer constant-time path hides the
//! load stage's cost and leaves only the reload's.

use crate::cache::{CacheConfig, CacheState, Line, ReplacementPolicy};
use crate::sim::{simulate, MicroarchConfig, OpKind, ProgramBuilder};

use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepetitionConfig {
    pub iterations: usize,
    pub racing_fix: bool,
}

impl Default for RepetitionConfig {
    fn default() -> Self {
        RepetitionConfig {
            iterations: 1000,
            racing_fix: false,
        }
    }
}

/// Cycles spent in each stage, summed over the iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StageTimeStack {
    pub flush: u64,
    pub load: u64,
    pub reload: u64,
}

impl StageTimeStack {
    pub fn total(&self) -> u64 {
        self.flush + self.load + self.reload
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepetitionReport {
    pub same: StageTimeStack,
    pub different: StageTimeStack,
}

impl RepetitionReport {
    /// Different-address total minus same-address total.
    pub fn delta(&self) -> i64 {
        self.different.total() as i64 - self.same.total() as i64
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("case,flush,load,reload,total\n");
        for (name, st) in [("same", self.same), ("different", self.different)] {
            s.push_str(&format!("{name},{},{},{},{}\n", st.flush, st.load, st.reload, st.total()));
        }
        s
    }
}

fn run_case(cfg: &RepetitionConfig, m: &MicroarchConfig, same: bool) -> Result<StageTimeStack, ExperimentError> {
    let sets = 64;
    let ways = 8;
    let mut cache = CacheState::new(CacheConfig::l1(m, sets, ways, ReplacementPolicy::TrueLru))?;
    let probe = Line::in_set(0, 1, sets);
    let evset: Vec<Line> = (0..ways as u64).map(|k| Line::in_set(0, 2 + k, sets)).collect();
    let loaded = if same { probe } else { Line::in_set(1, 1, sets) };

    let mut b = ProgramBuilder::new();
    let mut prev = None;
    for &l in &evset {
        prev = Some(b.load(l, &prev.into_iter().collect::<Vec<_>>()));
    }
    let flush = b.build();

    let mut b = ProgramBuilder::new();
    let x = b.load(loaded, &[]);
    if cfg.racing_fix {
        let n = (m.dram_latency / m.div.latency + 2) as usize;
        let base = b.chain(OpKind::Div, n, None).expect("nonzero");
        b.op(OpKind::Add, &[base, x]);
    }
    let load = b.build();

    let mut b = ProgramBuilder::new();
    b.load(probe, &[]);
    let reload = b.build();

    let mut st = StageTimeStack::default();
    for _ in 0..cfg.iterations {
        st.flush += simulate(&flush, m, &mut cache)?.total_cycles;
        st.load += simulate(&load, m, &mut cache)?.total_cycles;
        st.reload += simulate(&reload, m, &mut cache)?.total_cycles;
        cache.clear_events();
    }
    Ok(st)
}

pub fn repetition_experiment(cfg: &RepetitionConfig, m: &MicroarchConfig) -> Result<RepetitionReport, ExperimentError> {
    Ok(RepetitionReport {
        same: run_case(cfg, m, true)?,
        different: run_case(cfg, m, false)?,
    })
}
