//! Flush+reload repetition, where the two stage costs cancel unless the
//! flush is raced.

use ilp_gadgets::experiment::{repetition_experiment, RepetitionConfig};
use ilp_gadgets::sim::MicroarchConfig;

fn main() {
    let m = MicroarchConfig::default();
    for racing_fix in [false, true] {
        let r = repetition_experiment(&RepetitionConfig { iterations: 1000, racing_fix }, &m).unwrap();
        println!("fix {racing_fix:5}: same {:?}", r.same);
        println!("           different {:?}", r.different);
        println!("           delta {}", r.delta());
    }
}
