//! End-to-end experiments: coarse timing, stage-time accounting, racing
//! gadget calibration and the transient leak built on the reorder
//! magnifier.

mod classifier;
mod granularity;
mod repetition;
mod spectre_back;
mod timer;

use thiserror::Error;

pub use classifier::{calibrate_classifier, hit_miss_classifier, ClassifierReport, GroundTruth};
pub use granularity::{granularity_sweep, min_ref_len, GranularityConfig, SweepPoint, SweepReport};
pub use repetition::{repetition_experiment, RepetitionConfig, RepetitionReport, StageTimeStack};
pub use spectre_back::{spectre_back, BitTrial, BitTrialReport, SpectreBackConfig};
pub use timer::{coarse_read, CoarseTimer, CYCLES_PER_MICROSECOND};

use crate::cache::CacheError;
use crate::gadget::GadgetError;
use crate::magnifier::MagnifierError;
use crate::sim::SimError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExperimentError {
    #[error("reference path of {0} ops no longer fits the transient window")]
    RobExceeded(usize),
    #[error("calibration means coincide; no threshold separates the bits")]
    CalibrationDegenerate,
    #[error("no reference length separates hits from misses: {0}")]
    CalibrationImpossible(String),
    #[error("bad experiment parameters: {0}")]
    Config(String),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Magnifier(#[from] MagnifierError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Cache(#[from] CacheError),
}
