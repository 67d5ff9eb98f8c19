//! Two independent chains on the default core, one per-instruction line each.

use ilp_gadgets::cache::{CacheConfig, CacheState, ReplacementPolicy};
use ilp_gadgets::sim::{simulate, MicroarchConfig, OpKind, ProgramBuilder};

fn main() {
    let m = MicroarchConfig::default();
    let mut b = ProgramBuilder::new();
    b.set_tag(Some("adds"));
    b.chain(OpKind::Add, 4, None);
    b.set_tag(Some("muls"));
    b.chain(OpKind::Mul, 2, None);
    b.set_tag(Some("div"));
    b.op(OpKind::Div, &[]);
    let p = b.build();

    let mut cache = CacheState::new(CacheConfig::l1(&m, 64, 8, ReplacementPolicy::TreePlru)).unwrap();
    let r = simulate(&p, &m, &mut cache).unwrap();
    print!("{}", r.instructions_csv(&p));
    println!("total cycles: {}", r.total_cycles);
    for (tag, done) in &r.path_completion {
        println!("{tag} done at {done}");
    }
}
