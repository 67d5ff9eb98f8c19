//! A bounds-check-bypass leak read through the reorder magnifier.
//!
//! A transient load, steered by the secret bit, warms one of two lines.
//! Two pointer chases through those lines race to insert A and B into the
//! monitored PLRU set, so the warmed line decides their order. The walk
//! that follows misses every period after A-then-B and almost never after
//! B-then-A, and a coarse timer reads the difference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cache::{CacheState, Line};
use crate::gadget::{build_reorder_race, run_race, ChainSpec, EmbeddedExpression, Order, PathSpec, RaceOutcome};
use crate::magnifier::plru::reorder_walk;
use crate::magnifier::{find_reorder_setup, Backend, Letter, PlruMagnifierSetup};
use crate::sim::{simulate_transient, BranchInfo, MicroarchConfig, ProgramBuilder};

use super::{CoarseTimer, ExperimentError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectreBackConfig {
    pub bits: usize,
    pub rounds: usize,
    pub timer_granularity: u64,
    pub timer_jitter: u64,
    pub calibration_trials: usize,
    pub seed: u64,
    /// Bit 0 warms the second chase's line instead of the first's.
    pub swap_warm_lines: bool,
    pub backend: Backend,
}

impl Default for SpectreBackConfig {
    fn default() -> Self {
        SpectreBackConfig {
            bits: 256,
            rounds: 4000,
            timer_granularity: 10_000,
            timer_jitter: 2_500,
            calibration_trials: 16,
            seed: 0,
            swap_warm_lines: false,
            backend: Backend::Replay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitTrial {
    pub bit: bool,
    pub order: Order,
    pub cycles: u64,
    pub reading: u64,
    pub guess: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BitTrialReport {
    pub trials: Vec<BitTrial>,
    pub threshold: f64,
    pub accuracy: f64,
}

impl BitTrialReport {
    /// Readings for bit 0 and bit 1 never overlap.
    pub fn disjoint(&self) -> bool {
        let range = |bit: bool| {
            let r = self.trials.iter().filter(|t| t.bit == bit).map(|t| t.reading);
            (r.clone().min(), r.max())
        };
        match (range(false), range(true)) {
            ((Some(lo0), Some(hi0)), (Some(lo1), Some(hi1))) => hi0 < lo1 || hi1 < lo0,
            _ => true,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("trial,bit,order,cycles,reading,guess\n");
        for (i, t) in self.trials.iter().enumerate() {
            let order = match t.order {
                Order::AFirst => "a_first",
                Order::BFirst => "b_first",
            };
            s.push_str(&format!("{i},{},{order},{},{},{}\n", t.bit as u8, t.cycles, t.reading, t.guess as u8));
        }
        s
    }
}

struct Layout {
    setup: PlruMagnifierSetup,
    array_size: Line,
    secret: Line,
    head: Line,
    warm: [Line; 2],
}

impl Layout {
    fn new() -> Result<Self, ExperimentError> {
        let setup = find_reorder_setup()?;
        let sets = setup.sets;
        let at = |set: usize| Line::in_set(set, 1, sets);
        Ok(Layout {
            array_size: at(2),
            secret: at(3),
            head: at(4),
            warm: [at(5), at(6)],
            setup,
        })
    }
}

/// Runs one bit through leak, race and walk; returns the walk's order and
/// cycle count.
fn trial(l: &Layout, cfg: &SpectreBackConfig, m: &MicroarchConfig, bit: bool) -> Result<(Order, u64), ExperimentError> {
    let mut cache: CacheState = l.setup.cache(m);
    l.setup.install(&mut cache, l.setup.before_a);
    cache.access(l.secret);

    // if (x < array_size) load warm[secret]
    let mut b = ProgramBuilder::new();
    let size = b.load(l.array_size, &[]);
    let branch = b.branch(&[size], BranchInfo::default());
    b.set_transient(true);
    let s = b.load(l.secret, &[]);
    let idx = (bit ^ cfg.swap_warm_lines) as usize;
    b.load(l.warm[idx], &[s]);
    b.set_transient(false);
    simulate_transient(&b.build(), branch, m, &mut cache)?;

    let path_m = EmbeddedExpression::new(l.head, PathSpec::single("chase_a", ChainSpec::loads(&[l.warm[0]])));
    let path_b = PathSpec::single("chase_b", ChainSpec::loads(&[l.warm[1]]));
    let s = &l.setup;
    let race = build_reorder_race(&path_m, &path_b, s.line(Letter::A), s.line(Letter::B), s.sets)?;
    let RaceOutcome::Order(order) = run_race(&race, m, &mut cache)?.outcome else {
        unreachable!("reorder race reports an order")
    };
    let walk = reorder_walk(&l.setup, &mut cache, cfg.rounds, m, cfg.backend)?;
    Ok((order, walk.cycles))
}

pub fn spectre_back(cfg: &SpectreBackConfig, m: &MicroarchConfig) -> Result<BitTrialReport, ExperimentError> {
    if cfg.calibration_trials < 2 {
        return Err(ExperimentError::Config("calibration needs at least two trials".into()));
    }
    let layout = Layout::new()?;
    let mut timer = CoarseTimer::new(cfg.timer_granularity, cfg.timer_jitter, cfg.seed ^ 0x7469_6d65)?;

    let (mut sum, mut n) = ([0f64; 2], [0usize; 2]);
    for i in 0..cfg.calibration_trials {
        let bit = i % 2 == 1;
        let (_, cycles) = trial(&layout, cfg, m, bit)?;
        sum[bit as usize] += timer.read(cycles) as f64;
        n[bit as usize] += 1;
    }
    let mean = [sum[0] / n[0] as f64, sum[1] / n[1] as f64];
    if mean[0] == mean[1] {
        return Err(ExperimentError::CalibrationDegenerate);
    }
    let threshold = (mean[0] + mean[1]) / 2.0;
    let slow_bit = mean[1] > mean[0];

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trials = Vec::with_capacity(cfg.bits);
    for _ in 0..cfg.bits {
        let bit: bool = rng.gen();
        let (order, cycles) = trial(&layout, cfg, m, bit)?;
        let reading = timer.read(cycles);
        let guess = if reading as f64 > threshold { slow_bit } else { !slow_bit };
        trials.push(BitTrial { bit, order, cycles, reading, guess });
    }
    let correct = trials.iter().filter(|t| t.bit == t.guess).count();
    Ok(BitTrialReport {
        accuracy: if trials.is_empty() { 0.0 } else { correct as f64 / trials.len() as f64 },
        trials,
        threshold,
    })
}
