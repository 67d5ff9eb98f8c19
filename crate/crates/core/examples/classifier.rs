//! Hit/miss classification with an ILP reference instead of a timer.

use ilp_gadgets::experiment::{calibrate_classifier, hit_miss_classifier, GroundTruth};
use ilp_gadgets::sim::MicroarchConfig;

fn main() {
    for jitter in [0, 2] {
        let m = MicroarchConfig { load_jitter: jitter, ..Default::default() };
        println!("jitter {jitter}: reference length {}", calibrate_classifier(&m).unwrap());
        for truth in [GroundTruth::L1Hit, GroundTruth::LlcMiss] {
            let r = hit_miss_classifier(truth, 1000, &m, 3).unwrap();
            println!("  {truth:?}: {}/{} correct", r.correct, r.trials);
        }
    }
}
