//! Shortest reference that beats each target, for a few op pairings.

use ilp_gadgets::experiment::{granularity_sweep, GranularityConfig};
use ilp_gadgets::sim::{MicroarchConfig, OpKind};

fn main() {
    let m = MicroarchConfig::default();
    for (r, t) in [(OpKind::Add, OpKind::Add), (OpKind::Mul, OpKind::Add), (OpKind::Add, OpKind::Mul)] {
        let cfg = GranularityConfig { ref_kind: r, target_kind: t, ..Default::default() };
        let s = granularity_sweep(&cfg, &m).unwrap();
        let head: Vec<_> = s.points.iter().take(12).map(|p| p.min_ref_len).collect();
        println!(
            "{}/{}: slope {:.3} granularity {} reach {} rob bound {:?}\n  first refs {head:?}",
            r.name(),
            t.name(),
            s.slope,
            s.granularity,
            s.max_measurable,
            s.rob_exceeded
        );
    }
}
