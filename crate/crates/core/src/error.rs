use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::policy::{ObjectKind, Verb};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttachmentError {
    #[error("attachment expression is empty")]
    Empty,
    #[error("attachment `{0}` must start with `/` or `~/`")]
    NotRooted(String),
}

/// Structural violations of the policy model.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Attachment(#[from] AttachmentError),
    #[error("verb `{verb}` is not legal for {kind} objects")]
    IllegalVerb { kind: ObjectKind, verb: Verb },
    #[error("rule has no verbs")]
    EmptyVerbs,
    #[error("rule has no object attachments")]
    EmptyObjects,
    #[error("profile `{0}` has no subject attachments")]
    EmptyAttachments(String),
    #[error("profile attachment `{0}` cannot be relative")]
    RelativeSubject(String),
    #[error("duplicate sibling profile name `{0}`")]
    DuplicateProfile(String),
    #[error("profile name is empty")]
    EmptyProfileName,
    #[error("unsupported policy version `{0}`")]
    UnsupportedVersion(String),
    #[error("unknown {what} `{value}`")]
    UnknownToken { what: &'static str, value: String },
}

/// Why a loader could not produce an imported document.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadFailure {
    #[error("not found")]
    NotFound,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImportError {
    #[error("import cycle: {}", chain.join(" -> "))]
    ImportCycle { chain: Vec<String> },
    #[error("import `{path}` not found (imported from `{from}`)")]
    ImportNotFound { path: String, from: String },
    #[error("in `{path}`: {message}")]
    Nested { path: String, message: String },
    #[error("after import expansion: {0}")]
    Policy(#[from] PolicyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("policy tree still contains import statements")]
    UnresolvedImports,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("{kind} objects have no mapping in {mode} mode")]
    UnmappableKind {
        kind: ObjectKind,
        mode: crate::dds::MappingMode,
    },
    #[error("verb `{verb}` is not legal for {kind} objects")]
    IllegalVerb { kind: ObjectKind, verb: Verb },
    #[error("object name `{0}` is not absolute")]
    NotAbsolute(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("permissions document has no grants")]
    NoGrants,
    #[error("grant `{0}`: validity window is empty (not_before >= not_after)")]
    EmptyValidity(String),
    #[error("grant `{grant}` rule {rule}: no publish/subscribe/relay criteria")]
    NoCriteria { grant: String, rule: usize },
    #[error("grant `{grant}` rule {rule}: empty domain set")]
    NoDomains { grant: String, rule: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("no profile in the policy applies to subject `{0}`")]
    NoApplicableProfile(String),
    #[error("validity must be at least one day")]
    InvalidValidity,
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Document(#[from] DocumentError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignError {
    #[error("no signer backend for `{0}`")]
    UnknownSigner(String),
    #[error("malformed signed artifact: {0}")]
    MalformedArtifact(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("duplicate subject `{0}`")]
    DuplicateSubject(String),
    #[error("edge references unknown subject `{0}`")]
    UnknownSubject(String),
    #[error("edge references unknown object `{0}`")]
    UnknownObject(String),
    #[error("object `{0}` is declared under several kinds; give the edge a kind")]
    AmbiguousObject(String),
    #[error("verb `{verb}` is not legal for {kind} objects")]
    IllegalVerb { kind: ObjectKind, verb: Verb },
    #[error("name `{0}` is not absolute")]
    NotAbsolute(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("no permissions document for subject `{0}`")]
    MissingDocument(String),
    #[error("label sets do not cover the same probes")]
    DomainMismatch,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Map(#[from] MapError),
}
