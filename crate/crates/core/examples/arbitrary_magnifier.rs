//! Arbitrary-policy magnifier with and without self-prefetching.

use ilp_gadgets::magnifier::{run_arbitrary_magnifier, ArbMagnifierConfig};
use ilp_gadgets::sim::MicroarchConfig;

fn main() {
    let m = MicroarchConfig::default();
    for prefetch in [false, true] {
        for rounds in [16, 64, 256, 1000] {
            let cfg = ArbMagnifierConfig { rounds, prefetch_enabled: prefetch, ..Default::default() };
            let r = run_arbitrary_magnifier(&cfg, &m).unwrap();
            println!(
                "prefetch {prefetch:5} rounds {rounds:4}: delta {:8}  misses {}/{}",
                r.delta,
                r.misses_state1(),
                r.misses_state0()
            );
        }
    }
}
