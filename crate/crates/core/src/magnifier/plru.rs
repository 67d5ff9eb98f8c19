use std::fmt;

use crate::cache::{CacheConfig, CacheLevel, CacheState, FillMode, Line, Outcome, PlruTree, ReplacementPolicy, SetMeta};
use crate::gadget::Order;
use crate::sim::{simulate, MicroarchConfig, ProgramBuilder};

use super::{MagnifierError, MagnifierReading, MagnifierRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    A,
    B,
    C,
    D,
    E,
}

impl Letter {
    pub const ALL: [Letter; 5] = [Letter::A, Letter::B, Letter::C, Letter::D, Letter::E];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

use Letter::{A, B, C, D, E};

pub const PA_PATTERN: [Letter; 6] = [B, C, E, C, D, C];
pub const REORDER_PATTERN: [Letter; 6] = [C, E, C, D, C, B];

/// Contents and tree of one 4-way set, by letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetState {
    pub tree: PlruTree,
    pub ways: [Letter; 4],
}

impl SetState {
    pub fn holds(&self, l: Letter) -> bool {
        self.ways.contains(&l)
    }

    /// Smallest of the eight states reachable by mirroring tree nodes. All
    /// eight behave identically, so states are compared by this form.
    pub fn canonical(&self) -> SetState {
        let mut best = *self;
        for m in 0..8u32 {
            let mut w = self.ways;
            let mut b = self.tree.bits();
            if m & 1 != 0 {
                w.swap(0, 1);
                b ^= 0b010;
            }
            if m & 2 != 0 {
                w.swap(2, 3);
                b ^= 0b100;
            }
            if m & 4 != 0 {
                w = [w[2], w[3], w[0], w[1]];
                b = (b ^ 1) & 1 | (b & 0b010) << 1 | (b & 0b100) >> 1;
            }
            let cand = SetState {
                tree: PlruTree::from_bits(4, b),
                ways: w,
            };
            best = best.min(cand);
        }
        best
    }
}

/// Result of replaying letters on a [`SetState`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub misses: Vec<bool>,
    pub end: SetState,
    /// Position of the first access after which A was gone.
    pub a_evicted_at: Option<usize>,
}

/// Replays `letters` on a lone 4-way tree-PLRU set.
pub fn trace(start: SetState, letters: &[Letter]) -> Trace {
    let mut lvl = CacheLevel::new(1, 4, ReplacementPolicy::TreePlru);
    let contents: Vec<_> = start.ways.iter().map(|l| Some(Line(l.index() as u64))).collect();
    lvl.install_set(0, &contents, SetMeta::Plru(start.tree));
    let mut misses = Vec::with_capacity(letters.len());
    let mut a_evicted_at = None;
    let mut had_a = start.holds(A);
    for (i, l) in letters.iter().enumerate() {
        let line = Line(l.index() as u64);
        match lvl.lookup(line) {
            Some(w) => {
                lvl.touch(0, w);
                misses.push(false);
            }
            None => {
                lvl.fill(line, FillMode::Normal);
                misses.push(true);
            }
        }
        let has_a = lvl.contains(Line(0));
        if had_a && !has_a && a_evicted_at.is_none() {
            a_evicted_at = Some(i);
        }
        had_a |= has_a;
    }
    let ways: Vec<Letter> = lvl
        .set_lines(0)
        .iter()
        .map(|l| Letter::ALL[l.expect("set stays full").0 as usize])
        .collect();
    let tree = match lvl.meta(0) {
        SetMeta::Plru(t) => *t,
        _ => unreachable!(),
    };
    Trace {
        misses,
        end: SetState {
            tree,
            ways: ways.try_into().unwrap(),
        },
        a_evicted_at,
    }
}

/// Every 4-way state holding distinct letters from `pool`, in lexicographic
/// order of (tree bits, way contents).
fn all_states(pool: &[Letter], must_hold: &[Letter]) -> Vec<SetState> {
    let mut out = Vec::new();
    for bits in 0..8u64 {
        let tree = PlruTree::from_bits(4, bits);
        for &w0 in pool {
            for &w1 in pool {
                for &w2 in pool {
                    for &w3 in pool {
                        let ways = [w0, w1, w2, w3];
                        let distinct = (0..4).all(|i| (i + 1..4).all(|j| ways[i] != ways[j]));
                        if distinct && must_hold.iter().all(|m| ways.contains(m)) {
                            out.push(SetState { tree, ways });
                        }
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlruMagnifierSetup {
    pub set_index: usize,
    pub sets: usize,
    /// Lines standing for A..E.
    pub lines: [Line; 5],
    /// State at a period boundary with A resident.
    pub periodic: SetState,
    /// State just before A arrives; A's insertion turns it into `periodic`.
    pub before_a: SetState,
    pub pattern: Vec<Letter>,
}

impl PlruMagnifierSetup {
    pub fn line(&self, l: Letter) -> Line {
        self.lines[l.index()]
    }

    /// Places the letters in set `set_index` of a cache with `sets` sets.
    pub fn placed(mut self, set_index: usize, sets: usize) -> Self {
        self.set_index = set_index;
        self.sets = sets;
        self.lines = std::array::from_fn(|i| Line::in_set(set_index, 1 + i as u64, sets));
        self
    }

    /// Installs `state` into `cache`.
    pub fn install(&self, cache: &mut CacheState, state: SetState) {
        let contents: Vec<_> = state.ways.iter().map(|&l| Some(self.line(l))).collect();
        cache.l1_mut().install_set(self.set_index, &contents, SetMeta::Plru(state.tree));
    }

    pub fn cache(&self, m: &MicroarchConfig) -> CacheState {
        CacheState::new(CacheConfig::l1(m, self.sets, 4, ReplacementPolicy::TreePlru)).expect("valid PLRU cache")
    }
}

/// Searches every tree state and placement of A plus three pattern letters
/// for a state that the pattern maps back onto itself with `len/2` misses
/// and without evicting A. The smallest such state wins.
pub fn find_initial_plru_state(
    pattern: &[Letter],
    resident: Letter,
    ways: usize,
) -> Result<PlruMagnifierSetup, MagnifierError> {
    if ways != 4 {
        return Err(MagnifierError::UnsupportedWays(ways));
    }
    if resident != A || pattern.is_empty() || pattern.contains(&A) {
        return Err(MagnifierError::ConfigRejected(
            "pattern must be over B..E with A as the resident line".into(),
        ));
    }
    let want = pattern.len() / 2;
    let cycles = |s: SetState, lead: &[Letter]| {
        let mut seq = lead.to_vec();
        seq.extend(pattern);
        let t = trace(s, &seq);
        let misses = t.misses[lead.len()..].iter().filter(|&&m| m).count();
        (t.a_evicted_at.is_none() && misses == want).then(|| t.end.canonical())
    };
    let periodic = all_states(&Letter::ALL, &[A])
        .into_iter()
        .find(|&s| cycles(s, &[]) == Some(s.canonical()))
        .ok_or(MagnifierError::NoPeriodicState)?;
    // A's insertion leaves the tree one bit away from `periodic`, and the
    // first pattern access overwrites that bit, so match after one period
    let before_a = all_states(&[B, C, D, E], &[])
        .into_iter()
        .find(|&s| cycles(s, &[A]) == Some(periodic.canonical()))
        .ok_or(MagnifierError::NoPeriodicState)?;
    Ok(PlruMagnifierSetup {
        set_index: 0,
        sets: 1,
        lines: std::array::from_fn(|i| Line(i as u64)),
        periodic,
        before_a,
        pattern: pattern.to_vec(),
    }
    .placed(0, 64))
}

/// Setup for the reorder gadget: a state holding B..E such that A then B
/// leads into the periodic 3-miss cycle, while B then A loses A for good.
pub fn find_reorder_setup() -> Result<PlruMagnifierSetup, MagnifierError> {
    const PERIODS: usize = 4;
    let body: Vec<Letter> = REORDER_PATTERN.iter().copied().cycle().take(6 * PERIODS).collect();
    let ok = |s: SetState| {
        let mut af = vec![A, B];
        af.extend(&body);
        let ta = trace(s, &af);
        let period_misses = |t: &Trace, k: usize| t.misses[2 + 6 * k..2 + 6 * (k + 1)].iter().filter(|&&m| m).count();
        let a_kept = ta.a_evicted_at.is_none() && (1..PERIODS).all(|k| period_misses(&ta, k) == 3);

        let mut bf = vec![B, A];
        bf.extend(&body);
        let tb = trace(s, &bf);
        let a_lost = tb.a_evicted_at.is_some() && period_misses(&tb, PERIODS - 1) == 0 && period_misses(&tb, PERIODS - 2) == 0;
        a_kept && a_lost
    };
    let before = all_states(&[B, C, D, E], &[])
        .into_iter()
        .find(|&s| ok(s))
        .ok_or(MagnifierError::NoPeriodicState)?;
    let periodic = trace(before, &[A, B]).end;
    Ok(PlruMagnifierSetup {
        set_index: 0,
        sets: 1,
        lines: std::array::from_fn(|i| Line(i as u64)),
        periodic,
        before_a: before,
        pattern: REORDER_PATTERN.to_vec(),
    }
    .placed(0, 64))
}

/// How a magnifier walks its access list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Dependent loads through the out-of-order simulator.
    #[default]
    Simulate,
    /// Straight cache replay summing latencies. Equivalent for serialized
    /// accesses, and much faster.
    Replay,
}

/// Walks `lines` as a pointer chase starting from the current cache state.
/// Returns per-round end cycles and miss counts, `per_round` lines a round.
pub fn serialized_walk(
    cache: &mut CacheState,
    m: &MicroarchConfig,
    lines: &[Line],
    per_round: usize,
    backend: Backend,
    watch: Option<Line>,
) -> Result<MagnifierRun, MagnifierError> {
    let rounds = if per_round == 0 { 0 } else { lines.len() / per_round };
    let mut run = MagnifierRun::with_rounds(rounds);
    match backend {
        Backend::Replay => {
            let mut t = 0u64;
            for (i, &l) in lines.iter().enumerate() {
                cache.clock = t;
                let r = cache.access(l);
                t += r.latency;
                run.record(i / per_round, !r.hit, t);
                if let Some(w) = watch {
                    run.watch_ok &= cache.contains(w);
                }
            }
            run.cycles = t;
        }
        Backend::Simulate => {
            let mut b = ProgramBuilder::new();
            let mut prev = None;
            for &l in lines {
                prev = Some(b.load(l, &prev.into_iter().collect::<Vec<_>>()));
            }
            let p = b.build();
            let first = cache.events().len();
            let mut present = watch.is_some_and(|w| cache.contains(w));
            let sim = simulate(&p, m, cache)?;
            for e in sim.cache_events.iter().filter(|e| e.level == 1 && e.outcome != Outcome::Invalidate) {
                let id = e.instr.expect("simulated access");
                if let Some(w) = watch {
                    if e.victim == Some(w) {
                        present = false;
                    }
                    if e.tag == w {
                        present = true;
                    }
                    run.watch_ok &= present;
                }
                let done = sim.timings[id].complete.expect("load completes");
                run.record(id / per_round, e.outcome == Outcome::Miss, done);
            }
            debug_assert_eq!(cache.events().len() - first, sim.cache_events.len());
            run.cycles = sim.total_cycles;
        }
    }
    Ok(run)
}

fn pattern_lines(setup: &PlruMagnifierSetup, rounds: usize) -> Vec<Line> {
    setup
        .pattern
        .iter()
        .cycle()
        .take(setup.pattern.len() * rounds)
        .map(|&l| setup.line(l))
        .collect()
}

/// One P/A magnifier run. `present` decides whether A was brought in by the
/// racing gadget before the walk.
pub fn plru_pa_run(
    setup: &PlruMagnifierSetup,
    present: bool,
    rounds: usize,
    m: &MicroarchConfig,
    backend: Backend,
) -> Result<MagnifierRun, MagnifierError> {
    let mut cache = setup.cache(m);
    setup.install(&mut cache, setup.before_a);
    if present {
        cache.access(setup.line(A));
    }
    let watch = present.then(|| setup.line(A));
    serialized_walk(&mut cache, m, &pattern_lines(setup, rounds), setup.pattern.len(), backend, watch)
}

/// State 0 is A absent, state 1 is A present.
pub fn run_plru_pa_magnifier(
    setup: &PlruMagnifierSetup,
    rounds: usize,
    m: &MicroarchConfig,
) -> Result<MagnifierReading, MagnifierError> {
    let s0 = plru_pa_run(setup, false, rounds, m, Backend::Simulate)?;
    let s1 = plru_pa_run(setup, true, rounds, m, Backend::Simulate)?;
    Ok(MagnifierReading::from_runs(&s0, &s1))
}

/// Applies the race's insertion order of A and B to `cache`, which must
/// hold `setup.before_a` in the monitored set.
pub fn apply_order(setup: &PlruMagnifierSetup, cache: &mut CacheState, order: Order) {
    let (x, y) = match order {
        Order::AFirst => (A, B),
        Order::BFirst => (B, A),
    };
    cache.access(setup.line(x));
    cache.access(setup.line(y));
}

pub fn plru_reorder_run(
    setup: &PlruMagnifierSetup,
    order: Order,
    rounds: usize,
    m: &MicroarchConfig,
    backend: Backend,
) -> Result<MagnifierRun, MagnifierError> {
    let mut cache = setup.cache(m);
    setup.install(&mut cache, setup.before_a);
    apply_order(setup, &mut cache, order);
    let watch = (order == Order::AFirst).then(|| setup.line(A));
    serialized_walk(&mut cache, m, &pattern_lines(setup, rounds), setup.pattern.len(), backend, watch)
}

/// State 0 is B before A, state 1 is A before B.
pub fn run_plru_reorder_magnifier(
    setup: &PlruMagnifierSetup,
    rounds: usize,
    m: &MicroarchConfig,
) -> Result<MagnifierReading, MagnifierError> {
    let s0 = plru_reorder_run(setup, Order::BFirst, rounds, m, Backend::Simulate)?;
    let s1 = plru_reorder_run(setup, Order::AFirst, rounds, m, Backend::Simulate)?;
    Ok(MagnifierReading::from_runs(&s0, &s1))
}

/// Continues a reorder walk on a cache whose monitored set already saw the
/// race. Used when the race itself was simulated.
pub fn reorder_walk(
    setup: &PlruMagnifierSetup,
    cache: &mut CacheState,
    rounds: usize,
    m: &MicroarchConfig,
    backend: Backend,
) -> Result<MagnifierRun, MagnifierError> {
    serialized_walk(cache, m, &pattern_lines(setup, rounds), setup.pattern.len(), backend, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_counts_misses() {
        let s = SetState {
            tree: PlruTree::new(4),
            ways: [A, B, C, D],
        };
        let t = trace(s, &[E, A]);
        assert_eq!(t.misses, vec![true, true]);
        assert_eq!(t.a_evicted_at, Some(0));
    }
}
