//! Leaks 32 secret bits through a transient gadget, a reorder magnifier and
//! a 5 microsecond timer.

use ilp_gadgets::experiment::{spectre_back, BitTrial, SpectreBackConfig};
use ilp_gadgets::sim::MicroarchConfig;

fn main() {
    let cfg = SpectreBackConfig { bits: 32, seed: 7, ..Default::default() };
    let r = spectre_back(&cfg, &MicroarchConfig::default()).unwrap();
    let bits = |f: fn(&BitTrial) -> bool| r.trials.iter().map(|t| if f(t) { '1' } else { '0' }).collect::<String>();
    println!("secret  {}", bits(|t| t.bit));
    println!("guessed {}", bits(|t| t.guess));
    println!("threshold {:.0} cycles, accuracy {}, disjoint {}", r.threshold, r.accuracy, r.disjoint());
}
