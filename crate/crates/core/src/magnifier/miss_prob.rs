use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cache::{CacheConfig, CacheState, Line, ReplacementPolicy};
use crate::sim::MicroarchConfig;

/// Fraction of trials in which inserting `par_len` fresh lines into a
/// random-replacement set primed with `seq_len` lines evicts at least one
/// of them.
///
/// Each trial starts from an empty set, so the first fills take free ways.
pub fn monte_carlo_miss_prob(seq_len: usize, par_len: usize, ways: usize, trials: usize, seed: u64) -> f64 {
    assert!(seq_len <= ways, "seq_len must not exceed ways");
    if trials == 0 {
        return 0.0;
    }
    let m = MicroarchConfig::default();
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let seq: Vec<_> = (0..seq_len as u64).map(Line).collect();
    let mut hits = 0usize;
    for _ in 0..trials {
        let policy = ReplacementPolicy::Random { seed: seeds.gen() };
        let mut cache = CacheState::new(CacheConfig::l1(&m, 1, ways, policy)).expect("valid set");
        cache.prime_set(0, &seq).expect("seq fits");
        for k in 0..par_len as u64 {
            cache.access(Line(1_000 + k));
        }
        if seq.iter().any(|&l| !cache.contains(l)) {
            hits += 1;
        }
    }
    hits as f64 / trials as f64
}
