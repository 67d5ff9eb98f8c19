//! Set-associative caches with tree-PLRU, true LRU and seeded random
//! replacement, optionally backed by an inclusive last-level cache.

mod level;
mod plru;

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

pub use level::{CacheLevel, FillMode, ReplacementPolicy, SetMeta};
pub use plru::{plru_evict_candidate, plru_update, PlruTree};

use crate::sim::MicroarchConfig;

/// Line-granular address. The set index is the line number modulo the set
/// count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Line(pub u64);

impl Line {
    pub fn set_index(self, sets: usize) -> usize {
        (self.0 % sets as u64) as usize
    }

    /// The `k`-th line mapping to `set`.
    pub fn in_set(set: usize, k: u64, sets: usize) -> Line {
        Line(set as u64 + k * sets as u64)
    }
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LlcConfig {
    pub sets: usize,
    pub ways: usize,
    pub policy: ReplacementPolicy,
    pub hit_latency: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheConfig {
    pub sets: usize,
    pub ways: usize,
    pub policy: ReplacementPolicy,
    pub hit_latency: u64,
    /// Latency of a fill from memory.
    pub miss_latency: u64,
    pub llc: Option<LlcConfig>,
    pub inclusive: bool,
    pub prefetch_fill: FillMode,
}

impl CacheConfig {
    /// Single-level cache with the L1 and DRAM latencies of `m`.
    pub fn l1(m: &MicroarchConfig, sets: usize, ways: usize, policy: ReplacementPolicy) -> Self {
        CacheConfig {
            sets,
            ways,
            policy,
            hit_latency: m.l1_latency,
            miss_latency: m.dram_latency,
            llc: None,
            inclusive: false,
            prefetch_fill: FillMode::Normal,
        }
    }

    /// 64-set 8-way L1 in front of an inclusive 1024-set 16-way LLC.
    pub fn two_level(m: &MicroarchConfig, policy: ReplacementPolicy) -> Self {
        CacheConfig {
            llc: Some(LlcConfig {
                sets: 1024,
                ways: 16,
                policy,
                hit_latency: m.llc_latency,
            }),
            inclusive: true,
            ..Self::l1(m, 64, 8, policy)
        }
    }

    pub fn validate(&self) -> Result<(), CacheError> {
        let bad = |m: &str| Err(CacheError::Config(m.to_owned()));
        if self.sets == 0 || self.ways == 0 {
            return bad("sets and ways must be at least 1");
        }
        if self.policy == ReplacementPolicy::TreePlru && !self.ways.is_power_of_two() {
            return bad("tree-PLRU needs a power-of-two way count");
        }
        if self.miss_latency <= self.hit_latency {
            return bad("miss_latency must exceed hit_latency");
        }
        if let Some(llc) = self.llc {
            if llc.sets == 0 || llc.ways == 0 {
                return bad("LLC sets and ways must be at least 1");
            }
            if !(self.hit_latency < llc.hit_latency && llc.hit_latency < self.miss_latency) {
                return bad("latencies must increase from L1 to LLC to memory");
            }
            if llc.policy == ReplacementPolicy::TreePlru && !llc.ways.is_power_of_two() {
                return bad("tree-PLRU needs a power-of-two way count");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CacheError {
    #[error("set {0} could not be primed: lines do not all fit")]
    PrimeFailed(usize),
    #[error("operation needs a two-level hierarchy")]
    SingleLevel,
    #[error("bad cache configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Hit,
    Miss,
    /// Back-invalidation forced by an inclusive LLC eviction.
    Invalidate,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Hit => "hit",
            Outcome::Miss => "miss",
            Outcome::Invalidate => "inval",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheEvent {
    pub cycle: u64,
    /// 1 for L1, 2 for the LLC.
    pub level: u8,
    pub set: usize,
    pub tag: Line,
    pub outcome: Outcome,
    pub victim: Option<Line>,
    /// Instruction that caused the access, when driven by the simulator.
    pub instr: Option<usize>,
}

pub fn events_csv(events: &[CacheEvent]) -> String {
    let mut s = String::from("cycle,level,set,tag,outcome,victim\n");
    for e in events {
        let victim = e.victim.map(|v| v.0.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{},{}", e.cycle, e.level, e.set, e.tag.0, e.outcome.name(), victim);
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServedBy {
    L1,
    Llc,
    Memory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessResult {
    pub hit: bool,
    pub served_by: ServedBy,
    /// Line evicted from L1 by this access.
    pub evicted: Option<Line>,
    pub latency: u64,
    /// L1 way now holding the line.
    pub victim_way: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeReport {
    pub passes: usize,
    pub misses: usize,
}

/// Upper bound on passes `prime_set` makes under random replacement.
pub const PRIME_PASS_CAP: usize = 64;

#[derive(Debug, Clone)]
pub struct CacheState {
    config: CacheConfig,
    l1: CacheLevel,
    llc: Option<CacheLevel>,
    events: Vec<CacheEvent>,
    /// Cycle stamped on events from accesses not driven by the simulator.
    pub clock: u64,
}

impl CacheState {
    pub fn new(config: CacheConfig) -> Result<Self, CacheError> {
        config.validate()?;
        let llc = config.llc.map(|c| {
            // Decorrelate the two levels' random streams.
            let policy = match c.policy {
                ReplacementPolicy::Random { seed } => ReplacementPolicy::Random {
                    seed: seed ^ 0x9e37_79b9_7f4a_7c15,
                },
                p => p,
            };
            CacheLevel::new(c.sets, c.ways, policy)
        });
        Ok(CacheState {
            l1: CacheLevel::new(config.sets, config.ways, config.policy),
            llc,
            config,
            events: Vec::new(),
            clock: 0,
        })
    }

    pub fn config(&self) -> &CacheConfig {
        &self.config
    }

    pub fn l1(&self) -> &CacheLevel {
        &self.l1
    }

    pub fn l1_mut(&mut self) -> &mut CacheLevel {
        &mut self.l1
    }

    pub fn llc(&self) -> Option<&CacheLevel> {
        self.llc.as_ref()
    }

    pub fn events(&self) -> &[CacheEvent] {
        &self.events
    }

    pub fn clear_events(&mut self) {
        self.events.clear();
    }

    pub fn set_of(&self, line: Line) -> usize {
        self.l1.set_of(line)
    }

    pub fn contains(&self, line: Line) -> bool {
        self.l1.contains(line)
    }

    pub fn contains_llc(&self, line: Line) -> bool {
        self.llc.as_ref().is_some_and(|l| l.contains(line))
    }

    pub fn plru_tree(&self, set: usize) -> Option<PlruTree> {
        match self.l1.meta(set) {
            SetMeta::Plru(t) => Some(*t),
            _ => None,
        }
    }

    /// Latency an access would see, without touching any state.
    pub fn peek_latency(&self, line: Line) -> u64 {
        if self.l1.contains(line) {
            self.config.hit_latency
        } else if let (Some(llc), Some(c)) = (&self.llc, self.config.llc) {
            if llc.contains(line) {
                c.hit_latency
            } else {
                self.config.miss_latency
            }
        } else {
            self.config.miss_latency
        }
    }

    pub fn access(&mut self, line: Line) -> AccessResult {
        self.access_at(line, self.clock, None)
    }

    pub fn access_at(&mut self, line: Line, cycle: u64, instr: Option<usize>) -> AccessResult {
        self.reference(line, cycle, instr, FillMode::Normal)
    }

    /// Prefetch: same lookup path as a demand access, filling per
    /// `prefetch_fill`.
    pub fn prefetch_at(&mut self, line: Line, cycle: u64, instr: Option<usize>) -> AccessResult {
        self.reference(line, cycle, instr, self.config.prefetch_fill)
    }

    pub fn two_level_access(&mut self, line: Line) -> Result<AccessResult, CacheError> {
        if self.llc.is_none() {
            return Err(CacheError::SingleLevel);
        }
        Ok(self.access(line))
    }

    fn log(&mut self, cycle: u64, level: u8, set: usize, tag: Line, outcome: Outcome, victim: Option<Line>, instr: Option<usize>) {
        self.events.push(CacheEvent { cycle, level, set, tag, outcome, victim, instr });
    }

    fn reference(&mut self, line: Line, cycle: u64, instr: Option<usize>, mode: FillMode) -> AccessResult {
        let set = self.l1.set_of(line);
        if let Some(way) = self.l1.lookup(line) {
            if mode == FillMode::Normal {
                self.l1.touch(set, way);
            }
            if let Some(llc) = &mut self.llc {
                // Keep LLC recency in step with demand traffic.
                let s2 = llc.set_of(line);
                if let Some(w2) = llc.lookup(line) {
                    llc.touch(s2, w2);
                }
            }
            self.log(cycle, 1, set, line, Outcome::Hit, None, instr);
            return AccessResult {
                hit: true,
                served_by: ServedBy::L1,
                evicted: None,
                latency: self.config.hit_latency,
                victim_way: Some(way),
            };
        }

        let mut served_by = ServedBy::Memory;
        let mut latency = self.config.miss_latency;
        if let (Some(llc), Some(c)) = (&mut self.llc, self.config.llc) {
            let s2 = llc.set_of(line);
            if let Some(w2) = llc.lookup(line) {
                llc.touch(s2, w2);
                served_by = ServedBy::Llc;
                latency = c.hit_latency;
                self.events.push(CacheEvent { cycle, level: 2, set: s2, tag: line, outcome: Outcome::Hit, victim: None, instr });
            } else {
                let (_, ev2) = llc.fill(line, FillMode::Normal);
                self.events.push(CacheEvent { cycle, level: 2, set: s2, tag: line, outcome: Outcome::Miss, victim: ev2, instr });
                if let (Some(gone), true) = (ev2, self.config.inclusive) {
                    if self.l1.invalidate(gone).is_some() {
                        let gs = self.l1.set_of(gone);
                        self.log(cycle, 1, gs, gone, Outcome::Invalidate, None, instr);
                    }
                }
            }
        }

        let (way, evicted) = self.l1.fill(line, mode);
        self.log(cycle, 1, set, line, Outcome::Miss, evicted, instr);
        AccessResult {
            hit: false,
            served_by,
            evicted,
            latency,
            victim_way: Some(way),
        }
    }

    /// Removes `line` from every level.
    pub fn flush_line(&mut self, line: Line) {
        self.l1.invalidate(line);
        if let Some(llc) = &mut self.llc {
            llc.invalidate(line);
        }
    }

    /// Makes every line in `lines` resident in L1 set `set`.
    ///
    /// Deterministic policies get a single pass. Random replacement repeats
    /// passes until all lines are resident, up to `PRIME_PASS_CAP`.
    pub fn prime_set(&mut self, set: usize, lines: &[Line]) -> Result<PrimeReport, CacheError> {
        assert!(lines.iter().all(|l| self.set_of(*l) == set), "line outside set {set}");
        let passes_allowed = match self.config.policy {
            ReplacementPolicy::Random { .. } => PRIME_PASS_CAP,
            _ => 1,
        };
        let mut report = PrimeReport { passes: 0, misses: 0 };
        if lines.len() > self.config.ways {
            return Err(CacheError::PrimeFailed(set));
        }
        while report.passes < passes_allowed {
            report.passes += 1;
            for &l in lines {
                if !self.access(l).hit {
                    report.misses += 1;
                }
            }
            if lines.iter().all(|&l| self.contains(l)) {
                return Ok(report);
            }
        }
        Err(CacheError::PrimeFailed(set))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plru4() -> CacheState {
        let m = MicroarchConfig::default();
        CacheState::new(CacheConfig::l1(&m, 16, 4, ReplacementPolicy::TreePlru)).unwrap()
    }

    #[test]
    fn cold_miss_then_hit() {
        let mut c = plru4();
        let a = c.access(Line(3));
        assert!(!a.hit && a.evicted.is_none() && a.latency == 200);
        let b = c.access(Line(3));
        assert!(b.hit && b.latency == 4);
        assert_eq!(c.events().len(), 2);
    }

    #[test]
    fn full_plru_set_evicts_candidate() {
        let mut c = plru4();
        let lines: Vec<_> = (0..4).map(|k| Line::in_set(0, k, 16)).collect();
        let r = c.prime_set(0, &lines).unwrap();
        assert_eq!(r, PrimeReport { passes: 1, misses: 4 });
        // fills went to ways 0..3 in order; the tree now points at way 0
        assert_eq!(c.plru_tree(0).unwrap().evict_candidate(), 0);
        let r = c.access(Line::in_set(0, 9, 16));
        assert_eq!(r.evicted, Some(lines[0]));
    }

    #[test]
    fn prime_overfull_fails() {
        let m = MicroarchConfig::default();
        let mut c = CacheState::new(CacheConfig::l1(&m, 8, 8, ReplacementPolicy::Random { seed: 1 })).unwrap();
        let lines: Vec<_> = (0..9).map(|k| Line::in_set(2, k, 8)).collect();
        assert_eq!(c.prime_set(2, &lines), Err(CacheError::PrimeFailed(2)));
    }

    #[test]
    fn random_prime_terminates() {
        let m = MicroarchConfig::default();
        let mut c = CacheState::new(CacheConfig::l1(&m, 64, 8, ReplacementPolicy::Random { seed: 42 })).unwrap();
        for k in 0..8 {
            c.access(Line::in_set(5, 100 + k, 64));
        }
        let lines: Vec<_> = (0..6).map(|k| Line::in_set(5, k, 64)).collect();
        let r = c.prime_set(5, &lines).unwrap();
        assert!(r.passes <= PRIME_PASS_CAP);
        assert!(lines.iter().all(|&l| c.contains(l)));
    }

    #[test]
    fn two_level_latencies_and_inclusion() {
        let m = MicroarchConfig::default();
        let mut cfg = CacheConfig::two_level(&m, ReplacementPolicy::TrueLru);
        cfg.llc = Some(LlcConfig { sets: 4, ways: 2, policy: ReplacementPolicy::TrueLru, hit_latency: 40 });
        let mut c = CacheState::new(cfg).unwrap();
        assert_eq!(c.two_level_access(Line(0)).unwrap().latency, 200);
        assert!(c.contains(Line(0)) && c.contains_llc(Line(0)));
        assert_eq!(c.two_level_access(Line(0)).unwrap().latency, 4);
        // LLC set 0 holds two lines; a third evicts Line(0) there and in L1
        c.access(Line(4));
        c.access(Line(8));
        assert!(!c.contains_llc(Line(0)));
        assert!(!c.contains(Line(0)));
        assert!(c.events().iter().any(|e| e.outcome == Outcome::Invalidate && e.tag == Line(0)));
        // now an LLC hit after an L1-only eviction
        c.l1_mut().invalidate(Line(8));
        assert_eq!(c.access(Line(8)).latency, 40);
    }

    #[test]
    fn single_level_rejects_two_level_access() {
        assert_eq!(plru4().two_level_access(Line(1)), Err(CacheError::SingleLevel));
    }

    #[test]
    fn weak_prefetch_stays_victim() {
        let m = MicroarchConfig::default();
        let mut cfg = CacheConfig::l1(&m, 1, 4, ReplacementPolicy::TrueLru);
        cfg.prefetch_fill = FillMode::Weak;
        let mut c = CacheState::new(cfg).unwrap();
        for k in 0..4 {
            c.access(Line(k));
        }
        c.prefetch_at(Line(10), 0, None);
        let r = c.access(Line(11));
        assert_eq!(r.evicted, Some(Line(10)));
    }

    #[test]
    fn csv_header_and_rows() {
        let mut c = plru4();
        c.access(Line(1));
        let csv = events_csv(c.events());
        assert_eq!(csv, "cycle,level,set,tag,outcome,victim\n0,1,1,1,miss,\n");
    }
}
