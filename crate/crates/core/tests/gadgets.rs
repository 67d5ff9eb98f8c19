use ilp_gadgets::cache::{CacheConfig, CacheState, Line, ReplacementPolicy};
use ilp_gadgets::gadget::*;
use ilp_gadgets::sim::*;

const SETS: usize = 64;

fn cache(m: &MicroarchConfig) -> CacheState {
    CacheState::new(CacheConfig::l1(m, SETS, 8, ReplacementPolicy::TreePlru)).unwrap()
}

fn adds(tag: &str, n: usize) -> PathSpec {
    PathSpec::single(tag, ChainSpec::uniform(OpKind::Add, n))
}

fn head() -> Line {
    Line(0x1000 * SETS as u64 + 63)
}

#[test]
fn single_chain_embedding_shape() {
    let p = embed_expression(&EmbeddedExpression::new(head(), adds("t", 3))).unwrap();
    assert_eq!(p.len(), 6);
    assert_eq!(p.instructions[0].kind, OpKind::Load);
    assert_eq!(p.instructions[1].deps, vec![0]);
    assert_eq!(p.instructions[5].deps, vec![4]);
    assert!(validate_program(&p).is_ok());
}

#[test]
fn two_chain_terminator_joins_both() {
    let e = EmbeddedExpression::new(
        head(),
        PathSpec::new("t", vec![ChainSpec::uniform(OpKind::Add, 2), ChainSpec::uniform(OpKind::Mul, 2)]),
    );
    let p = embed_expression(&e).unwrap();
    let term = p.instructions.last().unwrap();
    assert_eq!(term.deps.len(), 2);
    // both pre-extension adds hang off the head load
    assert_eq!(p.instructions[1].deps, vec![0]);
    assert_eq!(p.instructions[2].deps, vec![0]);
}

#[test]
fn empty_path_rejected() {
    let e = EmbeddedExpression::new(head(), PathSpec::new("t", vec![]));
    assert_eq!(embed_expression(&e), Err(GadgetError::EmptyPath));
}

#[test]
fn head_miss_gates_target() {
    let m = MicroarchConfig::default();
    let p = embed_expression(&EmbeddedExpression::new(head(), adds("t", 5))).unwrap();
    let r = simulate(&p, &m, &mut cache(&m)).unwrap();
    for id in p.ids_tagged("t") {
        assert!(r.timings[id].issue.unwrap() >= m.dram_latency);
    }
}

#[test]
fn extension_overhead_is_two_adds() {
    let m = MicroarchConfig::default();
    assert_eq!(extension_cycles(&EmbeddedExpression::new(head(), adds("t", 9)), &m).unwrap(), 2);
}

fn interleaved_listing() -> Program {
    let mut b = ProgramBuilder::new();
    b.set_tag(Some("head"));
    let h = b.load(head(), &[]);
    let (mut x, mut y) = (h, h);
    for _ in 0..4 {
        b.set_tag(Some("path_m"));
        x = b.op(OpKind::Add, &[x]);
        b.set_tag(Some("path_b"));
        y = b.op(OpKind::Add, &[y]);
    }
    b.build()
}

#[test]
fn verify_accepts_interleaved_chains() {
    assert!(verify_race_program(&interleaved_listing(), "path_m", "path_b").is_ok());
}

#[test]
fn verify_rejects_cross_edge() {
    let mut p = interleaved_listing();
    let last = p.len() - 1;
    p.instructions[last - 1].deps.push(last - 2);
    // last-1 is path_m, last-2 is path_b
    assert_eq!(
        verify_race_program(&p, "path_m", "path_b"),
        Err(GadgetError::CrossPathDependency { from: last - 2, to: last - 1 })
    );
}

#[test]
fn verify_rejects_unsynchronized_start() {
    let mut p = interleaved_listing();
    p.instructions[2].deps.clear();
    assert_eq!(
        verify_race_program(&p, "path_m", "path_b"),
        Err(GadgetError::UnsynchronizedStart("path_b".into()))
    );
}

fn pa(m_len: usize, b_len: usize) -> RaceOutcome {
    let m = MicroarchConfig::default();
    let rp = build_transient_pa_race(
        &EmbeddedExpression::new(head(), adds("path_m", m_len)),
        &adds("path_b", b_len),
        Line(5),
    )
    .unwrap();
    run_race(&rp, &m, &mut cache(&m)).unwrap().outcome
}

#[test]
fn presence_race_examples() {
    assert_eq!(pa(20, 5), RaceOutcome::Presence(true));
    assert_eq!(pa(5, 20), RaceOutcome::Presence(false));
}

fn reorder(m_len: usize, b_len: usize) -> RaceReport {
    let m = MicroarchConfig::default();
    let rp = build_reorder_race(
        &EmbeddedExpression::new(head(), adds("path_m", m_len)),
        &adds("path_b", b_len),
        Line(3),
        Line(3 + SETS as u64),
        SETS,
    )
    .unwrap();
    run_race(&rp, &m, &mut cache(&m)).unwrap()
}

#[test]
fn reorder_race_examples() {
    assert_eq!(reorder(10, 20).outcome, RaceOutcome::Order(Order::AFirst));
    assert_eq!(reorder(20, 10).outcome, RaceOutcome::Order(Order::BFirst));
    // path_m carries two extension ops, so +2 on path_b equalizes them
    let tie = reorder(10, 12);
    assert_eq!(tie.outcome, RaceOutcome::Order(Order::AFirst));
    assert!(tie.tie);
    assert!(!reorder(10, 13).tie);
    assert_eq!(tie.start_skew, 0);
}

#[test]
fn reorder_builder_errors() {
    let e = EmbeddedExpression::new(head(), adds("path_m", 1));
    let b = adds("path_b", 1);
    assert_eq!(build_reorder_race(&e, &b, Line(1), Line(1), SETS), Err(GadgetError::SameAddress));
    assert_eq!(build_reorder_race(&e, &b, Line(1), Line(2), SETS), Err(GadgetError::DifferentSets));
}

#[test]
fn missing_probe_reported() {
    let m = MicroarchConfig::default();
    let mut rp = build_transient_pa_race(&EmbeddedExpression::new(head(), adds("path_m", 3)), &adds("path_b", 1), Line(5)).unwrap();
    rp.kind = RaceKind::Presence { branch: 5, probe: Line(77) };
    assert_eq!(run_race(&rp, &m, &mut cache(&m)).unwrap_err(), GadgetError::ProbeNeverReferenced);
}

#[test]
fn threshold_sweep_separates_targets() {
    // a path_b chain of length T acts as threshold: targets faster than
    // T (plus the extension overhead) bring the probe in, slower ones don't
    for threshold in [4usize, 10, 25] {
        for target in 1..40usize {
            let present = pa(target, threshold) == RaceOutcome::Presence(true);
            // probe issues at head+T, squash lands at head+target+2 (extensions)+1 (resolve)
            let expect = threshold < target + 3;
            assert_eq!(present, expect, "target {target} threshold {threshold}");
        }
    }
}
