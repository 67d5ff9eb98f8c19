//! Simulator and toolkit for instruction-level-parallelism timing gadgets.
//!
//! A racing gadget turns the relative speed of two instruction paths into a
//! cache-state difference; a magnifier turns that difference into a
//! run-time difference large enough for a coarse timer. The crate models
//! both on a deterministic out-of-order core and cache hierarchy.
//!
//! - [`sim`]: the out-of-order scheduler.
//! - [`cache`]: set-associative caches and replacement policies.
//! - [`gadget`]: path construction and the two racing gadgets.
//! - [`magnifier`]: PLRU, arbitrary-policy and arithmetic magnifiers.
//! - [`experiment`]: end-to-end drivers built from the pieces above.
//! - [`cli`]: the command-line front end.

pub mod cache;
pub mod cli;
pub mod experiment;
pub mod gadget;
pub mod kv;
pub mod magnifier;
pub mod sim;
