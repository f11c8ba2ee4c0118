//! File formats, keystore workspace and command line for the `armory` tool.
//!
//! The policy model, evaluator, compiler, access decision point and
//! verification harness live in `armory-core`; this crate adds everything that
//! touches the filesystem, the wall clock or the process.

pub mod cli;
pub mod clock;
pub mod keystore;
pub mod permissions_xml;
pub mod policy_xml;
pub mod scenario;
mod xml;

pub use armory_core as core;
