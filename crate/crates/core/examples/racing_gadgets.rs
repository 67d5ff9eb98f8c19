//! Both racing gadgets over a sweep of path lengths.

use ilp_gadgets::cache::{CacheConfig, CacheState, Line, ReplacementPolicy};
use ilp_gadgets::gadget::*;
use ilp_gadgets::sim::{MicroarchConfig, OpKind};

const SETS: usize = 64;

fn adds(tag: &str, n: usize) -> PathSpec {
    PathSpec::single(tag, ChainSpec::uniform(OpKind::Add, n))
}

fn main() {
    let m = MicroarchConfig::default();
    let head = Line(0x1000 * SETS as u64 + 63);
    let cache = || CacheState::new(CacheConfig::l1(&m, SETS, 8, ReplacementPolicy::TreePlru)).unwrap();

    // presence: the probe is fetched only if path_b wins against the branch
    for target in [2, 8, 14] {
        let rp = build_transient_pa_race(&EmbeddedExpression::new(head, adds("path_m", target)), &adds("path_b", 10), Line(5))
            .unwrap();
        let r = run_race(&rp, &m, &mut cache()).unwrap();
        println!("presence  m={target:2} b=10 -> {:?}", r.outcome);
    }

    // reorder: which of two same-set lines was touched first
    for target in [5, 10, 15] {
        let rp = build_reorder_race(
            &EmbeddedExpression::new(head, adds("path_m", target)),
            &adds("path_b", 12),
            Line(3),
            Line(3 + SETS as u64),
            SETS,
        )
        .unwrap();
        let r = run_race(&rp, &m, &mut cache()).unwrap();
        println!("reorder   m={target:2} b=12 -> {:?} (tie {})", r.outcome, r.tie);
    }
}
