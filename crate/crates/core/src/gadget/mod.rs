//! Paths, embedded target expressions and the two racing gadgets.
//!
//! A path is a set of independent dependency chains. Embedding a target
//! expression wraps its chains with a pre-extension (every chain input
//! depends on one cold head load, so both racers start together) and a
//! post-extension (a terminator depending on every chain tail).

mod path;
mod race;

use thiserror::Error;

pub use path::{embed_expression, extension_cycles, ChainOp, ChainSpec, EmbeddedExpression, PathSpec};
pub use race::{
    build_reorder_race, build_transient_pa_race, run_race, verify_race_program, Order, RaceKind, RaceOutcome,
    RaceProgram, RaceReport,
};

use crate::sim::{InstrId, SimError};

pub const HEAD_TAG: &str = "head";
pub const BRANCH_TAG: &str = "branch";
pub const PROBE_TAG: &str = "probe";
pub const ACCESS_A_TAG: &str = "access_a";
pub const ACCESS_B_TAG: &str = "access_b";
pub const FILLER_TAG: &str = "filler";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GadgetError {
    #[error("path has no chains or an empty chain")]
    EmptyPath,
    #[error("chain op {0} is a memory op without an address")]
    MissingAddress(usize),
    #[error("instruction {to} depends across paths on {from}")]
    CrossPathDependency { from: InstrId, to: InstrId },
    #[error("path `{0}` does not start from the shared head load")]
    UnsynchronizedStart(String),
    #[error("no instruction carries tag `{0}`")]
    MissingTag(String),
    #[error("both racing accesses target the same line")]
    SameAddress,
    #[error("racing accesses map to different cache sets")]
    DifferentSets,
    #[error("the probe or racing access is never referenced")]
    ProbeNeverReferenced,
    #[error(transparent)]
    Sim(#[from] SimError),
}
