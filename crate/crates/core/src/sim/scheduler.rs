use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cache::{CacheState, Outcome};

use super::config::{MicroarchConfig, UnitClass};
use super::op::{validate_program, InstrId, OpKind, Program};
use super::result::{InstrTiming, SimResult};
use super::SimError;

/// Runs `p` to completion with every instruction architectural.
///
/// Transient flags are ignored; use [`simulate_transient`] to model a
/// mispredicted branch.
pub fn simulate(p: &Program, cfg: &MicroarchConfig, cache: &mut CacheState) -> Result<SimResult, SimError> {
    validate_program(p)?;
    cfg.validate()?;
    Ok(Engine::new(p, cfg, cache, None).run())
}

/// Runs `p` treating `branch_id` as the one branch whose prediction matters.
///
/// The transient region is the run of transient-flagged instructions right
/// after the branch. Predicted taken with squash-on-resolve, the region runs
/// until `branch issue + branch_resolve_delay` and is then squashed; younger
/// work waits for the squash before allocating. Predicted not taken, the
/// region is skipped outright.
pub fn simulate_transient(
    p: &Program,
    branch_id: InstrId,
    cfg: &MicroarchConfig,
    cache: &mut CacheState,
) -> Result<SimResult, SimError> {
    validate_program(p)?;
    cfg.validate()?;
    let br = p.get(branch_id).ok_or(SimError::NotABranch(branch_id))?;
    let info = match (br.kind, br.branch) {
        (OpKind::Branch, Some(info)) => info,
        _ => return Err(SimError::NotABranch(branch_id)),
    };
    let start = branch_id + 1;
    let end = p.instructions[start..]
        .iter()
        .position(|i| !i.transient)
        .map_or(p.len(), |off| start + off);
    for ins in &p.instructions[end..] {
        if let Some(&d) = ins.deps.iter().find(|&&d| (start..end).contains(&d)) {
            return Err(SimError::TransientLeak { from: d, to: ins.id });
        }
    }
    let region = Region {
        branch: branch_id,
        start,
        end,
        mode: match (info.predicted_taken, info.squash_on_resolve) {
            (false, _) => RegionMode::Skipped,
            (true, true) => RegionMode::Squash,
            (true, false) => RegionMode::Architectural,
        },
    };
    Ok(Engine::new(p, cfg, cache, Some(region)).run())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RegionMode {
    Squash,
    Skipped,
    Architectural,
}

#[derive(Clone, Copy)]
struct Region {
    branch: InstrId,
    start: InstrId,
    end: InstrId,
    mode: RegionMode,
}

struct Engine<'a> {
    p: &'a Program,
    cfg: &'a MicroarchConfig,
    cache: &'a mut CacheState,
    region: Option<Region>,
    /// Squash pending until this cycle.
    squash_at: Option<u64>,
    /// The region no longer gates allocation.
    region_done: bool,
    consumers: Vec<Vec<InstrId>>,
    unissued_deps: Vec<u32>,
    ready_at: Vec<u64>,
    t: Vec<InstrTiming>,
    rob: VecDeque<InstrId>,
    next_alloc: InstrId,
    waiting: BinaryHeap<Reverse<(u64, InstrId)>>,
    ready: BTreeSet<InstrId>,
    units: Vec<Vec<u64>>,
    rng: Option<ChaCha8Rng>,
    squash_cycle: Option<u64>,
    flushes: usize,
    next_flush: Option<u64>,
}

impl<'a> Engine<'a> {
    fn new(p: &'a Program, cfg: &'a MicroarchConfig, cache: &'a mut CacheState, region: Option<Region>) -> Self {
        let n = p.len();
        let mut consumers = vec![Vec::new(); n];
        let mut unissued_deps = vec![0u32; n];
        for ins in &p.instructions {
            for &d in &ins.deps {
                consumers[d].push(ins.id);
            }
            unissued_deps[ins.id] = ins.deps.len() as u32;
        }
        let units = UnitClass::ALL
            .iter()
            .map(|&c| vec![0u64; cfg.unit(c).count])
            .collect();
        let mut t = vec![InstrTiming::default(); n];
        let mut region_done = region.is_none();
        if let Some(r) = region {
            match r.mode {
                RegionMode::Skipped => {
                    for x in &mut t[r.start..r.end] {
                        x.squashed = true;
                    }
                    region_done = true;
                }
                RegionMode::Architectural => region_done = true,
                RegionMode::Squash => {}
            }
        }
        Engine {
            p,
            cfg,
            cache,
            region,
            squash_at: None,
            region_done,
            consumers,
            unissued_deps,
            ready_at: vec![0; n],
            t,
            rob: VecDeque::with_capacity(cfg.rob_size),
            next_alloc: 0,
            waiting: BinaryHeap::new(),
            ready: BTreeSet::new(),
            units,
            rng: (cfg.load_jitter > 0).then(|| ChaCha8Rng::seed_from_u64(cfg.noise_seed)),
            squash_cycle: None,
            flushes: 0,
            next_flush: (cfg.flush_interval > 0).then_some(cfg.flush_interval),
        }
    }

    fn in_live_region(&self, id: InstrId) -> bool {
        match self.region {
            Some(r) if !self.region_done => (r.start..r.end).contains(&id),
            _ => false,
        }
    }

    fn run(mut self) -> SimResult {
        let first_event = self.cache.events().len();
        let n = self.p.len();
        let mut c: u64 = 0;
        loop {
            if self.next_flush == Some(c) {
                self.flush(c);
                self.next_flush = Some(c + self.cfg.flush_interval);
            }
            if self.squash_at == Some(c) {
                self.squash(c);
            }
            self.retire(c);
            self.allocate(c);
            while let Some(&Reverse((at, id))) = self.waiting.peek() {
                if at > c {
                    break;
                }
                self.waiting.pop();
                if !self.t[id].squashed {
                    self.ready.insert(id);
                }
            }
            self.issue(c);

            if self.next_alloc >= n && self.rob.is_empty() {
                break;
            }
            c = self.next_cycle(c);
        }

        let events = self.cache.events()[first_event..].to_vec();
        let mut misses = [0usize; 2];
        for e in &events {
            if e.outcome == Outcome::Miss {
                misses[(e.level as usize).clamp(1, 2) - 1] += 1;
            }
        }
        let mut path_completion = BTreeMap::new();
        for (ins, tm) in self.p.instructions.iter().zip(&self.t) {
            if let (Some(tag), Some(done), false) = (&ins.tag, tm.complete, tm.squashed) {
                let e = path_completion.entry(tag.clone()).or_insert(0);
                *e = done.max(*e);
            }
        }
        let total_cycles = self.t.iter().filter_map(|x| x.retire).max().unwrap_or(0);
        SimResult {
            timings: self.t,
            total_cycles,
            cache_events: events,
            misses,
            path_completion,
            squash_cycle: self.squash_cycle,
            flushes: self.flushes,
        }
    }

    fn next_cycle(&self, c: u64) -> u64 {
        if !self.ready.is_empty() || self.can_allocate() {
            return c + 1;
        }
        let mut next = u64::MAX;
        if let Some(&Reverse((at, _))) = self.waiting.peek() {
            next = next.min(at);
        }
        if let Some(&head) = self.rob.front() {
            if let Some(done) = self.t[head].complete {
                next = next.min(done);
            }
        }
        if let Some(s) = self.squash_at {
            next = next.min(s);
        }
        if let Some(f) = self.next_flush {
            next = next.min(f);
        }
        assert!(next != u64::MAX, "scheduler stalled at cycle {c}");
        next.max(c + 1)
    }

    fn can_allocate(&self) -> bool {
        self.next_alloc < self.p.len()
            && self.rob.len() < self.cfg.rob_size
            && !(self.region_blocks(self.next_alloc))
    }

    fn region_blocks(&self, id: InstrId) -> bool {
        matches!(self.region, Some(r) if !self.region_done && id >= r.end)
    }

    fn retire(&mut self, c: u64) {
        let mut n = 0;
        while n < self.cfg.issue_width {
            let Some(&head) = self.rob.front() else { break };
            if self.in_live_region(head) {
                break;
            }
            match self.t[head].complete {
                Some(done) if done <= c => {
                    self.t[head].retire = Some(c);
                    self.rob.pop_front();
                    n += 1;
                }
                _ => break,
            }
        }
    }

    fn allocate(&mut self, c: u64) {
        let mut n = 0;
        while n < self.cfg.issue_width && self.next_alloc < self.p.len() {
            let id = self.next_alloc;
            if self.t[id].squashed {
                self.next_alloc += 1;
                continue;
            }
            if self.rob.len() >= self.cfg.rob_size || self.region_blocks(id) {
                break;
            }
            self.t[id].alloc = Some(c);
            self.rob.push_back(id);
            if self.unissued_deps[id] == 0 {
                self.waiting.push(Reverse((self.ready_at[id], id)));
            }
            self.next_alloc += 1;
            n += 1;
        }
    }

    fn issue(&mut self, c: u64) {
        let mut issued = 0;
        let mut full = [false; 4];
        let candidates: Vec<InstrId> = self.ready.iter().copied().collect();
        for id in candidates {
            if issued >= self.cfg.issue_width || full.iter().all(|&f| f) {
                break;
            }
            let ins = &self.p.instructions[id];
            let class = UnitClass::of(ins.kind);
            if full[class.index()] {
                continue;
            }
            let Some(unit) = self.units[class.index()].iter().position(|&free| free <= c) else {
                full[class.index()] = true;
                continue;
            };
            self.units[class.index()][unit] = c + self.cfg.unit(class).recip_throughput;
            self.ready.remove(&id);
            issued += 1;

            let latency = self.execute(id, c);
            let done = c + latency;
            self.t[id].issue = Some(c);
            self.t[id].complete = Some(done);
            for k in 0..self.consumers[id].len() {
                let d = self.consumers[id][k];
                self.unissued_deps[d] -= 1;
                self.ready_at[d] = self.ready_at[d].max(done);
                if self.unissued_deps[d] == 0 && self.t[d].alloc.is_some() && !self.t[d].squashed {
                    self.waiting.push(Reverse((self.ready_at[d], d)));
                }
            }
        }
    }

    /// Performs side effects of issuing `id` at `c` and returns its latency.
    fn execute(&mut self, id: InstrId, c: u64) -> u64 {
        let ins = &self.p.instructions[id];
        match ins.kind {
            OpKind::Load | OpKind::Prefetch => {
                let line = ins.address.expect("validated memory op");
                let silent = self.in_live_region(id) && !self.cfg.transient_fill_persists;
                let base = if silent {
                    self.cache.peek_latency(line)
                } else if ins.kind == OpKind::Load {
                    self.cache.access_at(line, c, Some(id)).latency
                } else {
                    self.cache.prefetch_at(line, c, Some(id)).latency
                };
                if ins.kind == OpKind::Prefetch {
                    // Nothing waits on a prefetch; it only holds its entry.
                    return 1;
                }
                self.jitter(base)
            }
            OpKind::Branch => {
                if let Some(r) = self.region {
                    if r.branch == id && r.mode == RegionMode::Squash && !self.region_done {
                        self.squash_at = Some(c + self.cfg.branch_resolve_delay);
                    }
                }
                self.cfg.latency(OpKind::Branch)
            }
            k => self.cfg.latency(k),
        }
    }

    fn jitter(&mut self, base: u64) -> u64 {
        match &mut self.rng {
            Some(rng) => {
                let j = self.cfg.load_jitter as i64;
                let d: i64 = rng.gen_range(-j..=j);
                (base as i64 + d).max(1) as u64
            }
            None => base,
        }
    }

    fn squash(&mut self, c: u64) {
        let r = self.region.expect("squash without region");
        for id in r.start..r.end {
            if self.t[id].retire.is_none() {
                self.t[id].squashed = true;
                self.ready.remove(&id);
            }
        }
        self.rob.retain(|&id| !(r.start..r.end).contains(&id));
        self.squash_cycle = Some(c);
        self.squash_at = None;
        self.region_done = true;
    }

    /// Throws away every unretired instruction and restarts allocation at
    /// the oldest of them. A live transient region is squashed outright.
    fn flush(&mut self, c: u64) {
        self.flushes += 1;
        if !self.region_done && self.squash_at.is_some() {
            self.squash(c);
        }
        let Some(&oldest) = self.rob.front() else { return };
        self.rob.clear();
        self.waiting.clear();
        self.ready.clear();
        self.next_alloc = oldest;
        for id in oldest..self.p.len() {
            if self.t[id].squashed {
                continue;
            }
            self.t[id].alloc = None;
            self.t[id].issue = None;
            self.t[id].complete = None;
            let ins = &self.p.instructions[id];
            self.unissued_deps[id] = ins.deps.iter().filter(|&&d| d >= oldest).count() as u32;
            self.ready_at[id] = ins
                .deps
                .iter()
                .filter(|&&d| d < oldest)
                .filter_map(|&d| self.t[d].complete)
                .max()
                .unwrap_or(0);
        }
    }
}
