use std::collections::BTreeSet;

use crate::cache::{CacheState, Line, Outcome};
use crate::sim::{simulate, simulate_transient, BranchInfo, InstrId, MicroarchConfig, OpKind, Program, ProgramBuilder, SimResult};

use super::path::emit_head;
use super::{EmbeddedExpression, GadgetError, PathSpec, ACCESS_A_TAG, ACCESS_B_TAG, BRANCH_TAG, PROBE_TAG};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    AFirst,
    BFirst,
}

impl Order {
    pub fn flipped(self) -> Order {
        match self {
            Order::AFirst => Order::BFirst,
            Order::BFirst => Order::AFirst,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RaceOutcome {
    Presence(bool),
    Order(Order),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RaceKind {
    Presence { branch: InstrId, probe: Line },
    Reorder { addr_a: Line, addr_b: Line },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaceProgram {
    pub program: Program,
    pub kind: RaceKind,
    pub tag_m: String,
    pub tag_b: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaceReport {
    pub outcome: RaceOutcome,
    /// Both racing accesses issued in the same cycle; the order then comes
    /// from the oldest-first rule.
    pub tie: bool,
    /// Difference between the two paths' first issue cycles.
    pub start_skew: u64,
    pub sim: SimResult,
}

/// Checks that the two tagged paths never feed each other and both start
/// from a common load outside either path.
pub fn verify_race_program(p: &Program, tag_a: &str, tag_b: &str) -> Result<(), GadgetError> {
    let n = p.len();
    let has = |ins: &crate::sim::Instruction, t: &str| ins.tag.as_deref() == Some(t);
    for t in [tag_a, tag_b] {
        if !p.instructions.iter().any(|i| has(i, t)) {
            return Err(GadgetError::MissingTag(t.to_owned()));
        }
    }

    // reach[i]: which paths i transitively depends on (or belongs to)
    let mut reach = vec![(false, false); n];
    for ins in &p.instructions {
        let mut r = (has(ins, tag_a), has(ins, tag_b));
        for &d in &ins.deps {
            let (ra, rb) = reach[d];
            if (has(ins, tag_a) && rb) || (has(ins, tag_b) && ra) {
                return Err(GadgetError::CrossPathDependency { from: d, to: ins.id });
            }
            r = (r.0 | ra, r.1 | rb);
        }
        reach[ins.id] = r;
    }

    // untagged load ancestors of each instruction, computed lazily for roots
    let load_ancestors = |root: InstrId| -> BTreeSet<InstrId> {
        let mut seen = BTreeSet::new();
        let mut out = BTreeSet::new();
        let mut stack: Vec<InstrId> = p.instructions[root].deps.clone();
        while let Some(d) = stack.pop() {
            if !seen.insert(d) {
                continue;
            }
            let ins = &p.instructions[d];
            if has(ins, tag_a) || has(ins, tag_b) {
                continue;
            }
            if ins.kind == OpKind::Load {
                out.insert(d);
            }
            stack.extend(&ins.deps);
        }
        out
    };

    let mut common: Option<BTreeSet<InstrId>> = None;
    for t in [tag_a, tag_b] {
        let roots = p.instructions.iter().filter(|i| {
            has(i, t) && !i.deps.iter().any(|&d| has(&p.instructions[d], t))
        });
        for root in roots {
            let anc = load_ancestors(root.id);
            let next: BTreeSet<_> = match &common {
                None => anc,
                Some(c) => c.intersection(&anc).copied().collect(),
            };
            if next.is_empty() {
                return Err(GadgetError::UnsynchronizedStart(t.to_owned()));
            }
            common = Some(next);
        }
    }
    Ok(())
}

/// `if (path_m) { path_b; load probe }` with the branch predicted into the
/// body, so the body runs transiently until path_m resolves the branch.
pub fn build_transient_pa_race(
    path_m: &EmbeddedExpression,
    path_b: &PathSpec,
    probe: Line,
) -> Result<RaceProgram, GadgetError> {
    path_m.check()?;
    path_b.check()?;
    let mut b = ProgramBuilder::new();
    let head = emit_head(&mut b, path_m.head_miss_address);
    let cond = path_m.emit_after(&mut b, head);
    b.set_tag(Some(BRANCH_TAG));
    let branch = b.branch(&[cond], BranchInfo::default());
    b.set_transient(true);
    let tails = path_b.emit(&mut b, &[head]);
    b.set_tag(Some(PROBE_TAG));
    b.load(probe, &tails);
    b.set_transient(false);
    b.set_tag(None);
    let program = b.build();
    verify_race_program(&program, &path_m.target.tag, &path_b.tag)?;
    Ok(RaceProgram {
        program,
        kind: RaceKind::Presence { branch, probe },
        tag_m: path_m.target.tag.clone(),
        tag_b: path_b.tag.clone(),
    })
}

/// `path_m -> load A; path_b -> load B` with no branches.
pub fn build_reorder_race(
    path_m: &EmbeddedExpression,
    path_b: &PathSpec,
    addr_a: Line,
    addr_b: Line,
    sets: usize,
) -> Result<RaceProgram, GadgetError> {
    path_m.check()?;
    path_b.check()?;
    if addr_a == addr_b {
        return Err(GadgetError::SameAddress);
    }
    if addr_a.set_index(sets) != addr_b.set_index(sets) {
        return Err(GadgetError::DifferentSets);
    }
    let mut b = ProgramBuilder::new();
    let head = emit_head(&mut b, path_m.head_miss_address);
    let term = path_m.emit_after(&mut b, head);
    b.set_tag(Some(ACCESS_A_TAG));
    b.load(addr_a, &[term]);
    let tails = path_b.emit(&mut b, &[head]);
    b.set_tag(Some(ACCESS_B_TAG));
    b.load(addr_b, &tails);
    b.set_tag(None);
    let program = b.build();
    verify_race_program(&program, &path_m.target.tag, &path_b.tag)?;
    Ok(RaceProgram {
        program,
        kind: RaceKind::Reorder { addr_a, addr_b },
        tag_m: path_m.target.tag.clone(),
        tag_b: path_b.tag.clone(),
    })
}

fn first_issue(p: &Program, sim: &SimResult, tag: &str) -> Option<u64> {
    p.ids_tagged(tag).filter_map(|id| sim.timings[id].issue).min()
}

/// Simulates a race and reads its outcome from the cache.
pub fn run_race(rp: &RaceProgram, cfg: &MicroarchConfig, cache: &mut CacheState) -> Result<RaceReport, GadgetError> {
    let p = &rp.program;
    let references = |line: Line| p.instructions.iter().any(|i| i.address == Some(line));
    let (sim, outcome, tie) = match rp.kind {
        RaceKind::Presence { branch, probe } => {
            if !references(probe) {
                return Err(GadgetError::ProbeNeverReferenced);
            }
            let sim = simulate_transient(p, branch, cfg, cache)?;
            (sim, RaceOutcome::Presence(cache.contains(probe)), false)
        }
        RaceKind::Reorder { addr_a, addr_b } => {
            if !references(addr_a) || !references(addr_b) {
                return Err(GadgetError::ProbeNeverReferenced);
            }
            let sim = simulate(p, cfg, cache)?;
            let find = |line: Line| {
                sim.cache_events
                    .iter()
                    .position(|e| e.level == 1 && e.tag == line && e.outcome != Outcome::Invalidate)
            };
            let (Some(ia), Some(ib)) = (find(addr_a), find(addr_b)) else {
                return Err(GadgetError::ProbeNeverReferenced);
            };
            let tie = sim.cache_events[ia].cycle == sim.cache_events[ib].cycle;
            let order = if ia < ib { Order::AFirst } else { Order::BFirst };
            (sim, RaceOutcome::Order(order), tie)
        }
    };
    let skew = match (first_issue(p, &sim, &rp.tag_m), first_issue(p, &sim, &rp.tag_b)) {
        (Some(a), Some(b)) => a.abs_diff(b),
        _ => 0,
    };
    Ok(RaceReport {
        outcome,
        tie,
        start_skew: skew,
        sim,
    })
}
