//! Fills one 4-way tree-PLRU set and shows which way each miss evicts.

use ilp_gadgets::cache::{CacheConfig, CacheState, Line, ReplacementPolicy};
use ilp_gadgets::sim::MicroarchConfig;

fn main() {
    let m = MicroarchConfig::default();
    let sets = 16;
    let mut c = CacheState::new(CacheConfig::l1(&m, sets, 4, ReplacementPolicy::TreePlru)).unwrap();
    let line = |k| Line::in_set(0, k, sets);
    for k in [1, 2, 3, 4, 1, 5, 2, 6, 1] {
        let before = c.plru_tree(0).unwrap();
        let r = c.access(line(k));
        println!(
            "tag {k}: {:4} latency {:3} way {:?} evicted {:?} tree {:03b} -> {:03b}",
            if r.hit { "hit" } else { "miss" },
            r.latency,
            r.victim_way,
            r.evicted.map(|l| l.0 / sets as u64),
            before.bits(),
            c.plru_tree(0).unwrap().bits(),
        );
    }
}
