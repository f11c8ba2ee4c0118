//! Policy model, evaluation, transport permission compilation, transport access
//! decisions, mock signing and complete-graph verification.
//!
//! Everything here is `no_std` with `alloc`; file formats, the keystore and the
//! command line live in the `armory` crate.

#![no_std]

extern crate alloc;

pub mod dds;
pub mod error;
pub mod eval;
pub mod glob;
pub mod pdp;
pub mod policy;
pub mod sign;
pub mod verify;

pub use dds::{
    compile_permissions, fold_rules, map_object, CompileOptions, DdsAction, DdsCriteria, DdsRule, Grant,
    MappingMode, PermissionsDocument, Timestamp,
};
pub use eval::{evaluate_request, AccessRequest, Decision, Reason};
pub use glob::{glob_match, AttachmentExpression, AttachmentKind};
pub use pdp::{pdp_evaluate, PdpOutcome, PdpValue, TransportRequest};
pub use policy::{ObjectKind, PolicyProfile, PolicyRule, PolicyTree, Qualifier, RuleId, Verb};
