//! PLRU presence and reorder magnifiers: misses and delta against rounds.

use ilp_gadgets::magnifier::*;
use ilp_gadgets::sim::MicroarchConfig;

fn main() {
    let m = MicroarchConfig::default();
    let pa = find_initial_plru_state(&PA_PATTERN, Letter::A, 4).unwrap();
    let ro = find_reorder_setup().unwrap();
    println!("rounds  pa_misses(1/0)  pa_delta  reorder_misses(1/0)  reorder_delta");
    for rounds in [1, 10, 100, 1000] {
        let a = run_plru_pa_magnifier(&pa, rounds, &m).unwrap();
        let b = run_plru_reorder_magnifier(&ro, rounds, &m).unwrap();
        println!(
            "{rounds:6}  {:>7}/{:<7} {:9}  {:>10}/{:<9} {:13}",
            a.misses_state1(),
            a.misses_state0(),
            a.delta,
            b.misses_state1(),
            b.misses_state0(),
            b.delta
        );
    }
}
