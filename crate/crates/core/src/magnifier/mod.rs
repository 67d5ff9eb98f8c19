//! Magnifiers: constructions whose run time depends on a small cache-state
//! or timing difference, amplified over many rounds.

pub mod arbitrary;
pub mod arith;
mod miss_prob;
pub mod plru;

use std::fmt::Write as _;

use thiserror::Error;

pub use arbitrary::{run_arbitrary_magnifier, ArbMagnifierConfig};
pub use arith::{run_arith_magnifier, ArithLayout, ArithMagnifierConfig};
pub use miss_prob::monte_carlo_miss_prob;
pub use plru::{
    find_initial_plru_state, find_reorder_setup, run_plru_pa_magnifier, run_plru_reorder_magnifier, Backend, Letter,
    PlruMagnifierSetup, PA_PATTERN, REORDER_PATTERN,
};

use crate::cache::CacheError;
use crate::sim::SimError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MagnifierError {
    #[error("no periodic initial state exists for this pattern")]
    NoPeriodicState,
    #[error("configuration rejected: {0}")]
    ConfigRejected(String),
    #[error("PLRU magnifier needs a 4-way set, got {0} ways")]
    UnsupportedWays(usize),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// One magnifier execution under one input state.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MagnifierRun {
    pub cycles: u64,
    /// Cycle at which each round's observed path finished.
    pub round_end: Vec<u64>,
    pub round_misses: Vec<usize>,
    /// Whether every access was a miss, in order.
    pub miss_trace: Vec<bool>,
    /// False if a watched line was ever missing after an access.
    pub watch_ok: bool,
}

impl MagnifierRun {
    pub fn with_rounds(rounds: usize) -> Self {
        MagnifierRun {
            cycles: 0,
            round_end: vec![0; rounds],
            round_misses: vec![0; rounds],
            miss_trace: Vec::new(),
            watch_ok: true,
        }
    }

    pub(crate) fn record(&mut self, round: usize, miss: bool, done: u64) {
        if round < self.round_end.len() {
            self.round_end[round] = self.round_end[round].max(done);
            self.round_misses[round] += miss as usize;
        }
        self.miss_trace.push(miss);
    }

    pub fn misses(&self) -> usize {
        self.round_misses.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundRow {
    pub round: usize,
    pub cycles_state0: u64,
    pub cycles_state1: u64,
    pub misses_state0: usize,
    pub misses_state1: usize,
}

impl RoundRow {
    pub fn delta(&self) -> i64 {
        self.cycles_state1 as i64 - self.cycles_state0 as i64
    }
}

/// Both runs of a magnifier side by side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MagnifierReading {
    pub rounds: usize,
    pub cycles_state0: u64,
    pub cycles_state1: u64,
    pub delta: i64,
    pub per_round: Vec<RoundRow>,
}

impl MagnifierReading {
    pub fn from_runs(s0: &MagnifierRun, s1: &MagnifierRun) -> Self {
        let rounds = s0.round_end.len().min(s1.round_end.len());
        let per_round = (0..rounds)
            .map(|r| RoundRow {
                round: r + 1,
                cycles_state0: s0.round_end[r],
                cycles_state1: s1.round_end[r],
                misses_state0: s0.round_misses[r],
                misses_state1: s1.round_misses[r],
            })
            .collect();
        MagnifierReading {
            rounds,
            cycles_state0: s0.cycles,
            cycles_state1: s1.cycles,
            delta: s1.cycles as i64 - s0.cycles as i64,
            per_round,
        }
    }

    pub fn misses_state0(&self) -> usize {
        self.per_round.iter().map(|r| r.misses_state0).sum()
    }

    pub fn misses_state1(&self) -> usize {
        self.per_round.iter().map(|r| r.misses_state1).sum()
    }

    /// Cumulative delta after each round.
    pub fn deltas(&self) -> Vec<i64> {
        self.per_round.iter().map(RoundRow::delta).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("round,cycles_state0,cycles_state1,delta,misses_state0,misses_state1\n");
        for r in &self.per_round {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.round,
                r.cycles_state0,
                r.cycles_state1,
                r.delta(),
                r.misses_state0,
                r.misses_state1
            );
        }
        s
    }
}

/// Cache for programs that never touch memory.
pub(crate) fn no_cache() -> crate::cache::CacheState {
    let m = crate::sim::MicroarchConfig::default();
    crate::cache::CacheState::new(crate::cache::CacheConfig::l1(&m, 1, 1, crate::cache::ReplacementPolicy::TrueLru))
        .expect("valid")
}
