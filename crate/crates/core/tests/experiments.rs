use ilp_gadgets::cache::{CacheConfig, CacheState, Line, ReplacementPolicy};
use ilp_gadgets::experiment::*;
use ilp_gadgets::gadget::{build_transient_pa_race, run_race, ChainSpec, EmbeddedExpression, Order, PathSpec, RaceOutcome};
use ilp_gadgets::sim::{MicroarchConfig, OpKind};

fn m() -> MicroarchConfig {
    MicroarchConfig::default()
}

#[test]
fn coarse_read_examples() {
    let mut t = CoarseTimer::new(10_000, 0, 0).unwrap();
    assert_eq!(coarse_read(&mut t, 9_999), 0);
    assert_eq!(coarse_read(&mut t, 10_000), 10_000);
    let mut one = CoarseTimer::new(1, 0, 0).unwrap();
    for x in [0, 1, 17, 123_456_789] {
        assert_eq!(coarse_read(&mut one, x), x);
    }
    assert!(CoarseTimer::new(0, 0, 0).is_err());
}

#[test]
fn repetition_zero_iterations() {
    let r = repetition_experiment(&RepetitionConfig { iterations: 0, racing_fix: false }, &m()).unwrap();
    assert_eq!(r.same, StageTimeStack::default());
    assert_eq!(r.different, StageTimeStack::default());
}

#[test]
fn repetition_cancels_without_fix() {
    let m = m();
    let r = repetition_experiment(&RepetitionConfig { iterations: 1000, racing_fix: false }, &m).unwrap();
    let load = r.different.load as i64 - r.same.load as i64;
    let reload = r.different.reload as i64 - r.same.reload as i64;
    assert!(load < 0 && reload > 0, "load {load} reload {reload}");
    assert!(r.delta().unsigned_abs() <= m.dram_latency, "{r:?}");
}

#[test]
fn repetition_fix_restores_the_signal() {
    let m = m();
    let r = repetition_experiment(&RepetitionConfig { iterations: 1000, racing_fix: true }, &m).unwrap();
    let ideal = 1000 * (m.dram_latency - m.l1_latency) as i64;
    assert!((r.delta() - ideal).abs() <= m.dram_latency as i64, "{} vs {ideal}", r.delta());
    assert_eq!(r.same.load, r.different.load, "the race hides the load stage");
}

fn sweep(r: OpKind, t: OpKind, m: &MicroarchConfig) -> SweepReport {
    let cfg = GranularityConfig {
        ref_kind: r,
        target_kind: t,
        ..GranularityConfig::default()
    };
    granularity_sweep(&cfg, m).unwrap()
}

#[test]
fn add_reference_measures_adds_one_to_one() {
    let r = sweep(OpKind::Add, OpKind::Add, &m());
    assert!((0.9..=1.1).contains(&r.slope), "{}", r.slope);
    assert!(r.granularity <= 3);
    assert!(r.rob_exceeded.is_some());
}

#[test]
fn slope_follows_latency_ratio() {
    let m = m();
    for (rk, tk) in [(OpKind::Mul, OpKind::Add), (OpKind::Add, OpKind::Mul), (OpKind::Add, OpKind::Div)] {
        let r = sweep(rk, tk, &m);
        let want = m.latency(tk) as f64 / m.latency(rk) as f64;
        assert!((r.slope / want - 1.0).abs() <= 0.1, "{rk}/{tk}: slope {} want {want}", r.slope);
    }
}

#[test]
fn mul_reference_reaches_further() {
    let m = m();
    let add = sweep(OpKind::Add, OpKind::Add, &m);
    let mul = sweep(OpKind::Mul, OpKind::Add, &m);
    assert!(mul.max_measurable as f64 >= 2.5 * add.max_measurable as f64);
    assert!(mul.granularity <= 4);
}

/// The stop is not just the formula: past the cap, a longer reference
/// no longer lets a longer target through.
#[test]
fn transient_window_stops_growing_past_the_rob() {
    let m = m();
    let longest_target = |ref_len: usize| {
        (1..400)
            .take_while(|&t| {
                let race = build_transient_pa_race(
                    &EmbeddedExpression::new(
                        Line(0),
                        PathSpec::single("ref", ChainSpec::uniform(OpKind::Add, ref_len)).with_bookkeeping(3),
                    ),
                    &PathSpec::single("target", ChainSpec::uniform(OpKind::Add, t)),
                    Line(1),
                )
                .unwrap();
                let mut c = CacheState::new(CacheConfig::l1(&m, 64, 8, ReplacementPolicy::TrueLru)).unwrap();
                run_race(&race, &m, &mut c).unwrap().outcome == RaceOutcome::Presence(true)
            })
            .last()
            .unwrap_or(0)
    };
    let cap = GranularityConfig::default().ref_cap(&m);
    let at_cap = longest_target(cap);
    assert!(longest_target(cap / 2) < at_cap);
    for l in [cap + 10, 2 * cap, 4 * cap] {
        assert!(longest_target(l) <= at_cap + 2, "ref {l}");
    }
}

#[test]
fn smaller_rob_stops_sooner() {
    let small = MicroarchConfig { rob_size: 16, ..m() };
    let a = sweep(OpKind::Add, OpKind::Add, &m()).rob_exceeded.unwrap();
    let b = sweep(OpKind::Add, OpKind::Add, &small).rob_exceeded.unwrap();
    assert!(b < a);
}

#[test]
fn memory_kinds_cannot_form_a_ruler() {
    let cfg = GranularityConfig {
        ref_kind: OpKind::Load,
        ..GranularityConfig::default()
    };
    assert!(matches!(granularity_sweep(&cfg, &m()), Err(ExperimentError::Config(_))));
}

fn spectre(rounds: usize, g: u64, jitter: u64, swap: bool) -> Result<BitTrialReport, ExperimentError> {
    let cfg = SpectreBackConfig {
        bits: 64,
        rounds,
        timer_granularity: g,
        timer_jitter: jitter,
        seed: 3,
        swap_warm_lines: swap,
        ..SpectreBackConfig::default()
    };
    spectre_back(&cfg, &m())
}

#[test]
fn spectre_back_fine_timer() {
    let r = spectre(4000, 1, 0, false).unwrap();
    assert_eq!(r.accuracy, 1.0);
    for t in &r.trials {
        assert_eq!(t.order, if t.bit { Order::BFirst } else { Order::AFirst });
    }
}

#[test]
fn spectre_back_is_symmetric_in_the_warmed_line() {
    let a = spectre(4000, 10_000, 2_500, false).unwrap();
    let b = spectre(4000, 10_000, 2_500, true).unwrap();
    assert_eq!(a.accuracy, b.accuracy);
    for (x, y) in a.trials.iter().zip(&b.trials) {
        assert_eq!(x.bit, y.bit);
        assert_eq!(x.order, y.order.flipped());
    }
}

#[test]
fn spectre_back_without_rounds_is_a_coin_flip() {
    let r = spectre(0, 10_000, 2_500, false).unwrap();
    assert!((0.3..=0.7).contains(&r.accuracy), "{}", r.accuracy);
    assert_eq!(spectre(0, 10_000, 0, false).unwrap_err(), ExperimentError::CalibrationDegenerate);
}

#[test]
fn spectre_back_is_deterministic() {
    assert_eq!(spectre(500, 1_000, 200, false).unwrap(), spectre(500, 1_000, 200, false).unwrap());
}

#[test]
fn classifier_is_exact_without_noise() {
    for truth in [GroundTruth::L1Hit, GroundTruth::LlcMiss] {
        let r = hit_miss_classifier(truth, 50, &m(), 0).unwrap();
        assert_eq!(r.accuracy, 1.0, "{truth:?}");
    }
}

#[test]
fn classifier_reference_sits_between_hit_and_miss() {
    let m = m();
    let l = calibrate_classifier(&m).unwrap();
    // one MUL chain step is mul_latency cycles
    let t = l as u64 * m.mul.latency;
    assert!(m.l1_latency < t && t < m.dram_latency, "{l} MULs");
}

#[test]
fn classifier_rejects_equal_latencies() {
    let m = MicroarchConfig {
        l1_latency: 200,
        dram_latency: 200,
        ..m()
    };
    assert!(matches!(calibrate_classifier(&m), Err(ExperimentError::CalibrationImpossible(_))));
}
