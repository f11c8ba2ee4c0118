use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::mapping::map_pattern;
use super::{fold_rules, DdsCriteria, DdsRule, Grant, MappingMode, PermissionsDocument, Timestamp};
use crate::error::CompileError;
use crate::eval::{applicable_profiles, applicable_rules};
use crate::glob::escape_literal;
use crate::policy::{PolicyRule, PolicyTree, Qualifier, RuleId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompileOptions {
    /// Start of the validity window.
    pub now: Timestamp,
    pub validity_days: u32,
    pub domains: BTreeSet<u32>,
    /// Append the empty-string partition to every ALLOW rule.
    pub amend_empty_partition: bool,
    /// Run [`fold_rules`] on the result.
    pub fold: bool,
}

impl CompileOptions {
    pub const DEFAULT_VALIDITY_DAYS: u32 = 365;

    pub fn at(now: Timestamp) -> Self {
        Self {
            now,
            ..Self::default()
        }
    }
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            now: Timestamp(0),
            validity_days: Self::DEFAULT_VALIDITY_DAYS,
            domains: BTreeSet::from([0]),
            amend_empty_partition: false,
            fold: false,
        }
    }
}

/// Package/grant name for a subject URI: leading `/` stripped, `/` becomes `__`.
pub fn mangle_subject(subject: &str) -> String {
    subject.trim_start_matches('/').replace('/', "__")
}

/// The credential subject name a node presents for `subject`.
pub fn credential_subject_name(subject: &str) -> String {
    subject.to_string()
}

/// Compiles the rules applicable to `subject` into a single-grant document.
///
/// DENY-derived rules precede ALLOW-derived rules. Each rule is emitted once per
/// (source rule, object attachment, verb, transport leg, pattern split);
/// identical emitted rules collapse with their sources merged.
pub fn compile_permissions(
    tree: &PolicyTree,
    subject: &str,
    mode: MappingMode,
    opts: &CompileOptions,
) -> Result<PermissionsDocument, CompileError> {
    if opts.validity_days == 0 {
        return Err(CompileError::InvalidValidity);
    }
    if applicable_profiles(tree, subject)?.is_empty() {
        return Err(CompileError::NoApplicableProfile(subject.to_string()));
    }
    let slice = applicable_rules(tree, subject)?;

    let mut rules: Vec<DdsRule> = Vec::new();
    for qualifier in [Qualifier::Deny, Qualifier::Allow] {
        for (id, rule) in slice.iter().filter(|(_, r)| r.qualifier == qualifier) {
            emit_rule(&mut rules, id, rule, subject, mode, opts)?;
        }
    }

    let grant = Grant {
        name: mangle_subject(subject),
        subject_name: escape_literal(&credential_subject_name(subject)),
        not_before: opts.now,
        not_after: opts.now.plus_days(opts.validity_days),
        rules,
        default: Qualifier::Deny,
    };
    let doc = PermissionsDocument::new(alloc::vec![grant], slice_digest(&slice))?;
    Ok(if opts.fold { fold_rules(&doc) } else { doc })
}

fn emit_rule(
    out: &mut Vec<DdsRule>,
    id: &RuleId,
    rule: &PolicyRule,
    subject: &str,
    mode: MappingMode,
    opts: &CompileOptions,
) -> Result<(), CompileError> {
    let source = id.to_string();
    for object in &rule.objects {
        let object = object.expanded(subject);
        for &verb in &rule.verbs {
            for leg in map_pattern(rule.kind, &object.as_glob(), verb, mode)? {
                let mut partitions: Vec<String> = leg.partition.into_iter().collect();
                if opts.amend_empty_partition && rule.qualifier == Qualifier::Allow {
                    partitions.push(String::new());
                }
                let criteria = DdsCriteria {
                    topics: alloc::vec![leg.topic],
                    partitions,
                    tags: Vec::new(),
                };
                let mut candidate = DdsRule::new(rule.qualifier, opts.domains.clone())
                    .with_criteria(leg.action, criteria);
                match out.iter_mut().find(|r| same_criteria(r, &candidate)) {
                    Some(existing) => {
                        if !existing.sources.contains(&source) {
                            existing.sources.push(source.clone());
                        }
                    }
                    None => {
                        candidate.sources.push(source.clone());
                        out.push(candidate);
                    }
                }
            }
        }
    }
    Ok(())
}

fn same_criteria(a: &DdsRule, b: &DdsRule) -> bool {
    a.qualifier == b.qualifier
        && a.domains == b.domains
        && a.publish == b.publish
        && a.subscribe == b.subscribe
        && a.relay == b.relay
}

/// SHA-256 over a canonical text rendering of the applicable rules.
fn slice_digest(slice: &[(RuleId, &PolicyRule)]) -> String {
    let mut canon = String::new();
    for (id, rule) in slice {
        let _ = write!(canon, "{id}|{}|{}|", rule.qualifier, rule.kind);
        for v in &rule.verbs {
            let _ = write!(canon, "{v},");
        }
        canon.push('|');
        for o in &rule.objects {
            let _ = write!(canon, "{o},");
        }
        canon.push('\n');
    }
    let mut hex = String::from("sha256:");
    for b in Sha256::digest(canon.as_bytes()) {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}
