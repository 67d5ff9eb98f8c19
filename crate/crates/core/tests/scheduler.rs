use ilp_gadgets::cache::{CacheConfig, CacheState, Line, ReplacementPolicy};
use ilp_gadgets::sim::*;

fn cache(m: &MicroarchConfig) -> CacheState {
    CacheState::new(CacheConfig::l1(m, 64, 8, ReplacementPolicy::TreePlru)).unwrap()
}

fn run(p: &Program, m: &MicroarchConfig) -> SimResult {
    simulate(p, m, &mut cache(m)).unwrap()
}

#[test]
fn validation_examples() {
    assert!(validate_program(&Program::default()).is_ok());
    let mut b = ProgramBuilder::new();
    let a = b.op(OpKind::Add, &[]);
    b.op(OpKind::Add, &[a]);
    assert!(validate_program(&b.build()).is_ok());

    let mut b = ProgramBuilder::new();
    b.op(OpKind::Add, &[1]);
    b.op(OpKind::Add, &[]);
    assert_eq!(validate_program(&b.build()), Err(ProgramError::CyclicOrForwardDep(0)));

    let mut b = ProgramBuilder::new();
    b.op(OpKind::Add, &[]);
    b.op(OpKind::Load, &[0]);
    assert_eq!(validate_program(&b.build()), Err(ProgramError::MissingAddress(1)));
}

#[test]
fn serial_add_chain() {
    let mut b = ProgramBuilder::new();
    b.chain(OpKind::Add, 10, None);
    let r = run(&b.build(), &MicroarchConfig::default());
    assert_eq!(r.total_cycles, 10);
}

#[test]
fn two_chains_in_lockstep() {
    let m = MicroarchConfig {
        issue_width: 2,
        add: UnitSpec { count: 2, latency: 1, recip_throughput: 1 },
        ..MicroarchConfig::default()
    };
    let mut b = ProgramBuilder::new();
    let (mut x, mut y) = (None, None);
    for _ in 0..10 {
        x = b.chain(OpKind::Add, 1, x);
        y = b.chain(OpKind::Add, 1, y);
    }
    assert_eq!(run(&b.build(), &m).total_cycles, 10);
}

#[test]
fn div_throughput() {
    let mut b = ProgramBuilder::new();
    for _ in 0..4 {
        b.op(OpKind::Div, &[]);
    }
    let r = run(&b.build(), &MicroarchConfig::default());
    let issues: Vec<_> = r.timings.iter().map(|t| t.issue.unwrap()).collect();
    assert_eq!(issues, vec![0, 4, 8, 12]);
    assert_eq!(r.timings[3].complete, Some(21));
}

#[test]
fn load_latency_comes_from_cache() {
    let m = MicroarchConfig::default();
    let mut b = ProgramBuilder::new();
    let a = b.load(Line(7), &[]);
    b.load(Line(7), &[a]);
    let r = run(&b.build(), &m);
    assert_eq!(r.timings[0].complete, Some(200));
    assert_eq!(r.timings[1].complete, Some(204));
    assert_eq!(r.l1_misses(), 1);
}

#[test]
fn rob_limits_run_ahead() {
    let m = MicroarchConfig { rob_size: 8, ..MicroarchConfig::default() };
    let mut b = ProgramBuilder::new();
    b.load(Line(1), &[]);
    for _ in 0..20 {
        b.op(OpKind::Add, &[]);
    }
    let r = run(&b.build(), &m);
    // the ninth instruction cannot enter before the miss retires
    assert_eq!(r.timings[8].alloc, Some(200));
    for c in 0..r.total_cycles {
        assert!(r.rob_occupancy(c) <= 8);
    }
}

fn transient_probe(cond_len: usize, body_len: usize) -> (Program, usize) {
    let mut b = ProgramBuilder::new();
    let c = b.chain(OpKind::Add, cond_len, None);
    let br = b.branch(&c.into_iter().collect::<Vec<_>>(), BranchInfo::default());
    b.set_transient(true);
    let t = b.chain(OpKind::Add, body_len, None);
    b.load(Line(99), &t.into_iter().collect::<Vec<_>>());
    b.set_transient(false);
    b.op(OpKind::Add, &[br]);
    (b.build(), br)
}

#[test]
fn transient_fill_persists_when_issued_before_squash() {
    let m = MicroarchConfig::default();
    let (p, br) = transient_probe(20, 5);
    let mut c = cache(&m);
    let r = simulate_transient(&p, br, &m, &mut c).unwrap();
    assert!(c.contains(Line(99)));
    assert!(r.cache_events.iter().any(|e| e.tag == Line(99)));
    let probe = p.len() - 2;
    assert!(r.timings[probe].squashed);
    assert!(r.timings[probe].issue.unwrap() < r.squash_cycle.unwrap());
    assert!(r.timings[probe].retire.is_none());
}

#[test]
fn transient_load_after_squash_never_issues() {
    let m = MicroarchConfig::default();
    let (p, br) = transient_probe(5, 20);
    let mut c = cache(&m);
    let r = simulate_transient(&p, br, &m, &mut c).unwrap();
    assert!(!c.contains(Line(99)));
    assert!(r.cache_events.is_empty());
    // younger correct-path work allocates only after the squash
    let last = p.len() - 1;
    assert!(r.timings[last].alloc.unwrap() >= r.squash_cycle.unwrap());
}

#[test]
fn non_persistent_fills_leave_no_trace() {
    let m = MicroarchConfig { transient_fill_persists: false, ..MicroarchConfig::default() };
    let (p, br) = transient_probe(20, 5);
    let mut c = cache(&m);
    let before = format!("{:?}", c.l1());
    simulate_transient(&p, br, &m, &mut c).unwrap();
    assert_eq!(format!("{:?}", c.l1()), before);
}

#[test]
fn not_a_branch() {
    let m = MicroarchConfig::default();
    let (p, _) = transient_probe(2, 2);
    assert_eq!(simulate_transient(&p, 0, &m, &mut cache(&m)), Err(SimError::NotABranch(0)));
}

#[test]
fn squashed_work_does_not_count() {
    let m = MicroarchConfig::default();
    let (p, br) = transient_probe(3, 30);
    let r = simulate_transient(&p, br, &m, &mut cache(&m)).unwrap();
    let last_retire = r.timings.iter().filter(|t| !t.squashed).filter_map(|t| t.retire).max();
    assert_eq!(Some(r.total_cycles), last_retire);
}

#[test]
fn periodic_flush_replays_work() {
    let m = MicroarchConfig { flush_interval: 50, ..MicroarchConfig::default() };
    let mut b = ProgramBuilder::new();
    b.chain(OpKind::Div, 20, None);
    let p = b.build();
    let plain = run(&p, &MicroarchConfig::default());
    let flushed = run(&p, &m);
    assert!(flushed.flushes > 0);
    assert!(flushed.total_cycles > plain.total_cycles);
    assert!(flushed.timings.iter().all(|t| t.retire.is_some()));
}

#[test]
fn load_jitter_is_seeded() {
    let m = MicroarchConfig { load_jitter: 2, noise_seed: 9, ..MicroarchConfig::default() };
    let mut b = ProgramBuilder::new();
    let mut prev = None;
    for k in 0..50 {
        prev = Some(b.load(Line(k), &prev.into_iter().collect::<Vec<_>>()));
    }
    let p = b.build();
    let a = run(&p, &m);
    assert_eq!(a, run(&p, &m));
    assert_ne!(a.total_cycles, 50 * 200);
    assert!(a.total_cycles.abs_diff(50 * 200) <= 100);
}

#[test]
fn csv_has_one_row_per_instruction() {
    let (p, br) = transient_probe(2, 2);
    let m = MicroarchConfig::default();
    let r = simulate_transient(&p, br, &m, &mut cache(&m)).unwrap();
    assert_eq!(r.instructions_csv(&p).lines().count(), p.len() + 1);
}
