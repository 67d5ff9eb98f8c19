//! Dataflow model of an out-of-order back end: in-order allocation and
//! retirement through a bounded reorder buffer, out-of-order issue gated by
//! dependencies and functional units.

mod config;
mod op;
mod result;
mod scheduler;

use thiserror::Error;

pub use config::{MicroarchConfig, UnitClass, UnitSpec};
pub use op::{validate_program, BranchInfo, InstrId, Instruction, OpKind, Program, ProgramBuilder, ProgramError};
pub use result::{InstrTiming, SimResult};
pub use scheduler::{simulate, simulate_transient};

use crate::kv::ConfigError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("instruction {0} is not a branch")]
    NotABranch(InstrId),
    #[error("instruction {to} outside the transient region depends on {from} inside it")]
    TransientLeak { from: InstrId, to: InstrId },
}
