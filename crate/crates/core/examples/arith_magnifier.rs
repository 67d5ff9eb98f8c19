//! Arithmetic-only magnifier, with and without the ROB guard.

use ilp_gadgets::magnifier::{run_arith_magnifier, ArithMagnifierConfig};
use ilp_gadgets::sim::MicroarchConfig;

fn main() {
    let m = MicroarchConfig::default();
    let guarded = ArithMagnifierConfig { rounds: 200, ..Default::default() };
    println!("shape {:?}", guarded.shape(&m).unwrap());
    let d = run_arith_magnifier(&guarded, &m).unwrap().deltas();
    println!("guarded:   delta at 1, 20, 200 rounds = {}, {}, {}", d[0], d[19], d[199]);

    let small = MicroarchConfig { rob_size: 16, ..m };
    let loose = ArithMagnifierConfig { rob_guard: false, ..guarded };
    let d = run_arith_magnifier(&loose, &small).unwrap().deltas();
    println!("no guard, 16-entry ROB: delta at 1, 20, 200 rounds = {}, {}, {}", d[0], d[19], d[199]);
}
