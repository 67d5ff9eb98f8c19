use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ExperimentError;

/// Cycle counts are converted to wall time at 2 GHz.
pub const CYCLES_PER_MICROSECOND: u64 = 2_000;

/// A timer that only sees multiples of `granularity`, plus jitter.
#[derive(Debug, Clone)]
pub struct CoarseTimer {
    pub granularity: u64,
    pub jitter: u64,
    pub seed: u64,
    rng: ChaCha8Rng,
}

impl CoarseTimer {
    pub fn new(granularity: u64, jitter: u64, seed: u64) -> Result<Self, ExperimentError> {
        if granularity == 0 {
            return Err(ExperimentError::Config("timer granularity must be at least 1".into()));
        }
        Ok(CoarseTimer {
            granularity,
            jitter,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Granularity given in microseconds.
    pub fn from_micros(us: f64, jitter: u64, seed: u64) -> Result<Self, ExperimentError> {
        Self::new((us * CYCLES_PER_MICROSECOND as f64).round() as u64, jitter, seed)
    }

    pub fn read(&mut self, cycles: u64) -> u64 {
        let base = cycles / self.granularity * self.granularity;
        if self.jitter == 0 {
            base
        } else {
            base + self.rng.gen_range(0..=self.jitter)
        }
    }
}

/// `floor(cycles / G) * G`, plus uniform jitter in `[0, jitter]`.
pub fn coarse_read(timer: &mut CoarseTimer, cycles: u64) -> u64 {
    timer.read(cycles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floors_without_jitter() {
        let mut t = CoarseTimer::new(100, 0, 0).unwrap();
        assert_eq!(t.read(0), 0);
        assert_eq!(t.read(99), 0);
        assert_eq!(t.read(250), 200);
    }

    #[test]
    fn five_microseconds() {
        assert_eq!(CoarseTimer::from_micros(5.0, 0, 0).unwrap().granularity, 10_000);
    }
}
