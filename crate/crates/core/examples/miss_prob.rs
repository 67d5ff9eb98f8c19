//! How often PAR loads knock out at least one SEQ line under random replacement.

use ilp_gadgets::magnifier::monte_carlo_miss_prob;

fn main() {
    for (seq, par) in [(6, 5), (6, 3), (4, 5), (7, 2)] {
        let p = monte_carlo_miss_prob(seq, par, 8, 100_000, 1);
        println!("seq {seq} par {par} ways 8: {p:.4}");
    }
}
