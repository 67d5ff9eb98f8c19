//! Chain-reaction magnifier that works with any replacement policy.
//!
//! Path A walks `SEQ` of even sets and then fires `PAR` loads into the next
//! odd set; path B walks `SEQ` of odd sets. In step, B reads its set just
//! before A's `PAR` lands there. Once B falls behind, `PAR` arrives first,
//! evicts part of B's `SEQ`, and B's misses push it further behind every
//! round. B's own prefetches restore each odd set ahead of its reuse so the
//! walk can cycle through a finite number of sets.

use crate::cache::{CacheConfig, CacheState, Line, Outcome, ReplacementPolicy};
use crate::kv::{self, Applied, KvSection};
use crate::sim::{simulate, InstrId, MicroarchConfig, OpKind, Program, ProgramBuilder};

use super::{MagnifierError, MagnifierReading, MagnifierRun};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArbMagnifierConfig {
    pub sets: usize,
    pub ways: usize,
    pub policy: ReplacementPolicy,
    /// Sets used by the walk; must be even and leave one set spare.
    pub n_sets: usize,
    pub seq_len: usize,
    pub par_len: usize,
    pub prefetch_enabled: bool,
    /// Rounds between B's prefetch of a set and B's use of it.
    pub prefetch_distance: usize,
    pub rounds: usize,
    /// Head start path A gets in the misaligned run; `None` means one
    /// memory latency.
    pub misalign_delay: Option<u64>,
}

impl Default for ArbMagnifierConfig {
    fn default() -> Self {
        ArbMagnifierConfig {
            sets: 64,
            ways: 8,
            policy: ReplacementPolicy::TrueLru,
            n_sets: 32,
            seq_len: 6,
            par_len: 5,
            prefetch_enabled: true,
            prefetch_distance: 12,
            rounds: 1000,
            misalign_delay: None,
        }
    }
}

impl ArbMagnifierConfig {
    pub fn validate(&self) -> Result<(), MagnifierError> {
        let bad = |m: String| Err(MagnifierError::ConfigRejected(m));
        if self.seq_len == 0 || self.seq_len > self.ways {
            return bad(format!("seq_len {} must be in 1..={}", self.seq_len, self.ways));
        }
        if self.n_sets < 2 || self.n_sets % 2 != 0 || self.n_sets >= self.sets {
            return bad(format!("n_sets {} must be even, at least 2 and below {}", self.n_sets, self.sets));
        }
        if self.prefetch_enabled && (self.prefetch_distance == 0 || self.prefetch_distance >= self.n_sets / 2) {
            return bad(format!(
                "prefetch_distance {} must be in 1..{}",
                self.prefetch_distance,
                self.n_sets / 2
            ));
        }
        Ok(())
    }

    pub fn seq(&self, set: usize) -> Vec<Line> {
        (0..self.seq_len as u64).map(|k| Line::in_set(set, 1 + k, self.sets)).collect()
    }

    /// Disjoint from `seq(set)` by construction.
    pub fn par(&self, set: usize) -> Vec<Line> {
        (0..self.par_len as u64)
            .map(|k| Line::in_set(set, 1 + (self.seq_len as u64) + k, self.sets))
            .collect()
    }

    fn spare_set(&self) -> usize {
        self.sets - 1
    }

    fn cache(&self, m: &MicroarchConfig) -> Result<CacheState, MagnifierError> {
        let cfg = CacheConfig::l1(m, self.sets, self.ways, self.policy);
        let mut c = CacheState::new(cfg)?;
        for i in 0..self.n_sets {
            c.prime_set(i, &self.seq(i))?;
        }
        c.clear_events();
        Ok(c)
    }
}

impl KvSection for ArbMagnifierConfig {
    fn apply(&mut self, key: &str, v: &str) -> Result<Applied, String> {
        match key {
            "arb_sets" => self.sets = kv::value(key, v)?,
            "arb_ways" => self.ways = kv::value(key, v)?,
            "arb_policy" => {
                // `random:<seed>` pins the replacement stream
                let (name, seed) = match v.split_once(':') {
                    Some((n, sd)) => (n, kv::value(key, sd)?),
                    None => (v, 0),
                };
                self.policy = ReplacementPolicy::parse(name, seed).ok_or_else(|| format!("bad policy `{v}`"))?
            }
            "arb_n_sets" => self.n_sets = kv::value(key, v)?,
            "arb_seq_len" => self.seq_len = kv::value(key, v)?,
            "arb_par_len" => self.par_len = kv::value(key, v)?,
            "arb_prefetch" => self.prefetch_enabled = kv::boolean(key, v)?,
            "arb_prefetch_distance" => self.prefetch_distance = kv::value(key, v)?,
            "arb_misalign_delay" => {
                self.misalign_delay = match v {
                    "auto" => None,
                    _ => Some(kv::value(key, v)?),
                }
            }
            _ => return Ok(Applied::NotMine),
        }
        Ok(Applied::Taken)
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("arb_sets", self.sets.to_string()),
            ("arb_ways", self.ways.to_string()),
            (
                "arb_policy",
                match self.policy {
                    ReplacementPolicy::Random { seed } => format!("random:{seed}"),
                    p => p.to_string(),
                },
            ),
            ("arb_n_sets", self.n_sets.to_string()),
            ("arb_seq_len", self.seq_len.to_string()),
            ("arb_par_len", self.par_len.to_string()),
            ("arb_prefetch", self.prefetch_enabled.to_string()),
            ("arb_prefetch_distance", self.prefetch_distance.to_string()),
            (
                "arb_misalign_delay",
                self.misalign_delay.map_or_else(|| "auto".into(), |d| d.to_string()),
            ),
        ]
    }
}

/// Instruction ids of path B's `SEQ` loads, per round.
pub struct ArbProgram {
    pub program: Program,
    pub b_rounds: Vec<Vec<InstrId>>,
}

/// Builds the two-path program. Path B's first load waits `delay` cycles
/// after the shared head, realized as cold loads plus single-cycle adds.
pub fn build_arbitrary_program(cfg: &ArbMagnifierConfig, m: &MicroarchConfig, delay: u64) -> ArbProgram {
    let spare = cfg.spare_set();
    let mut b = ProgramBuilder::new();
    b.set_tag(Some("head"));
    let head = b.load(Line::in_set(spare, 1, cfg.sets), &[]);

    b.set_tag(Some("delay"));
    let mut b_tail = head;
    for k in 0..delay / m.dram_latency {
        b_tail = b.load(Line::in_set(spare, 2 + k, cfg.sets), &[b_tail]);
    }
    let adds = (delay % m.dram_latency) as usize / m.add.latency as usize;
    b_tail = b.chain(OpKind::Add, adds, Some(b_tail)).unwrap_or(b_tail);

    let n = cfg.n_sets;
    let mut a_tail = head;
    let mut b_rounds = Vec::with_capacity(cfg.rounds);
    for r in 0..cfg.rounds {
        let even = (2 * r) % n;
        let odd = even + 1;

        b.set_tag(Some("path_a"));
        for l in cfg.seq(even) {
            a_tail = b.load(l, &[a_tail]);
        }
        b.set_tag(Some("par"));
        for l in cfg.par(odd) {
            b.load(l, &[a_tail]);
        }

        // prefetches go after B's loads in program order so the
        // oldest-first issue rule never lets them delay B
        let start = b_tail;
        b.set_tag(Some("path_b"));
        let mut ids = Vec::with_capacity(cfg.seq_len);
        for l in cfg.seq(odd) {
            b_tail = b.load(l, &[b_tail]);
            ids.push(b_tail);
        }
        if cfg.prefetch_enabled {
            let ahead = (2 * (r + cfg.prefetch_distance) + 1) % n;
            b.set_tag(Some("prefetch"));
            for l in cfg.seq(ahead) {
                b.prefetch(l, &[start]);
            }
        }
        b_rounds.push(ids);
    }
    b.set_tag(None);
    ArbProgram {
        program: b.build(),
        b_rounds,
    }
}

/// One run of the magnifier with path B delayed by `delay` cycles.
pub fn arbitrary_run(cfg: &ArbMagnifierConfig, m: &MicroarchConfig, delay: u64) -> Result<MagnifierRun, MagnifierError> {
    cfg.validate()?;
    let mut cache = cfg.cache(m)?;
    let ap = build_arbitrary_program(cfg, m, delay);
    let sim = simulate(&ap.program, m, &mut cache)?;
    let mut missed = vec![false; ap.program.len()];
    for e in &sim.cache_events {
        if let (1, Outcome::Miss, Some(id)) = (e.level, e.outcome, e.instr) {
            missed[id] = true;
        }
    }
    let mut run = MagnifierRun::with_rounds(cfg.rounds);
    for (r, ids) in ap.b_rounds.iter().enumerate() {
        for &id in ids {
            run.record(r, missed[id], sim.timings[id].complete.expect("load completes"));
        }
    }
    run.cycles = sim.total_cycles;
    Ok(run)
}

/// State 0 runs both paths in step; state 1 delays path B.
pub fn run_arbitrary_magnifier(cfg: &ArbMagnifierConfig, m: &MicroarchConfig) -> Result<MagnifierReading, MagnifierError> {
    let delay = cfg.misalign_delay.unwrap_or(m.dram_latency);
    let s0 = arbitrary_run(cfg, m, 0)?;
    let s1 = arbitrary_run(cfg, m, delay)?;
    Ok(MagnifierReading::from_runs(&s0, &s1))
}
