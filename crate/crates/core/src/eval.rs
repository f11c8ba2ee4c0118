//! Semantic decision point over a resolved policy tree: deny by default, and any
//! matching DENY overrides every matching ALLOW.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::EvalError;
use crate::glob::expand_relative;
use crate::policy::{ObjectKind, PolicyRule, PolicyTree, ProfilePath, Qualifier, RuleId, Verb};

/// One `(subject, verb, object)` action probe.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AccessRequest {
    pub subject: String,
    pub kind: ObjectKind,
    pub object: String,
    pub verb: Verb,
}

impl AccessRequest {
    /// Builds a request, expanding a `~` object name against the subject.
    pub fn new(
        subject: impl Into<String>,
        verb: Verb,
        kind: ObjectKind,
        object: &str,
    ) -> Result<Self, EvalError> {
        let subject = subject.into();
        if !subject.starts_with('/') {
            return Err(EvalError::InvalidRequest(alloc::format!(
                "subject `{subject}` is not absolute"
            )));
        }
        let object = expand_relative(object, &subject);
        if !object.starts_with('/') {
            return Err(EvalError::InvalidRequest(alloc::format!(
                "object `{object}` is not absolute"
            )));
        }
        Ok(Self {
            subject,
            kind,
            object,
            verb,
        })
    }
}

impl core::fmt::Display for AccessRequest {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{} {} {} {}", self.subject, self.verb, self.kind, self.object)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Reason {
    ExplicitAllow,
    ExplicitDeny,
    DefaultDeny,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::ExplicitAllow => "explicit_allow",
            Reason::ExplicitDeny => "explicit_deny",
            Reason::DefaultDeny => "default_deny",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub outcome: Qualifier,
    pub reason: Reason,
    /// Rules that decided the outcome, sorted. Empty for a default deny.
    pub matched_rules: Vec<RuleId>,
}

impl Decision {
    pub fn is_allow(&self) -> bool {
        self.outcome == Qualifier::Allow
    }
}

fn ensure_resolved(tree: &PolicyTree) -> Result<(), EvalError> {
    if tree.has_imports() {
        Err(EvalError::UnresolvedImports)
    } else {
        Ok(())
    }
}

/// Profiles whose own attachments and every ancestor's attachments match `subject`.
pub fn applicable_profiles(tree: &PolicyTree, subject: &str) -> Result<Vec<ProfilePath>, EvalError> {
    Ok(applicable_rules_inner(tree, subject)?.0)
}

/// Every rule held by an applicable profile, in walk order.
pub fn applicable_rules<'a>(
    tree: &'a PolicyTree,
    subject: &str,
) -> Result<Vec<(RuleId, &'a PolicyRule)>, EvalError> {
    Ok(applicable_rules_inner(tree, subject)?.1)
}

type Slice<'a> = (Vec<ProfilePath>, Vec<(RuleId, &'a PolicyRule)>);

fn applicable_rules_inner<'a>(tree: &'a PolicyTree, subject: &str) -> Result<Slice<'a>, EvalError> {
    ensure_resolved(tree)?;
    let mut paths = Vec::new();
    let mut rules = Vec::new();
    // gate[d]: whether the profile at depth d on the current walk path applies
    let mut gate: Vec<bool> = Vec::new();
    tree.walk(|path, profile| {
        let depth = path.0.len() - 1;
        gate.truncate(depth);
        let parent_ok = gate.last().copied().unwrap_or(true);
        let applies = parent_ok && profile.attachments.iter().any(|a| a.matches(subject));
        gate.push(applies);
        if applies {
            paths.push(path.clone());
            for (index, rule) in profile.rules.iter().enumerate() {
                rules.push((
                    RuleId {
                        profile: path.clone(),
                        index,
                    },
                    rule,
                ));
            }
        }
    });
    Ok((paths, rules))
}

/// Whether `rule` covers the request; relative object attachments expand against
/// the request subject.
pub fn rule_matches(rule: &PolicyRule, request: &AccessRequest) -> bool {
    rule.kind == request.kind
        && rule.verbs.contains(&request.verb)
        && rule
            .objects
            .iter()
            .any(|o| o.expanded(&request.subject).matches(&request.object))
}

pub fn evaluate_request(tree: &PolicyTree, request: &AccessRequest) -> Result<Decision, EvalError> {
    let rules = applicable_rules(tree, &request.subject)?;
    let mut allows = Vec::new();
    let mut denies = Vec::new();
    for (id, rule) in rules {
        if rule_matches(rule, request) {
            match rule.qualifier {
                Qualifier::Allow => allows.push(id),
                Qualifier::Deny => denies.push(id),
            }
        }
    }
    let decision = if !denies.is_empty() {
        denies.sort();
        Decision {
            outcome: Qualifier::Deny,
            reason: Reason::ExplicitDeny,
            matched_rules: denies,
        }
    } else if !allows.is_empty() {
        allows.sort();
        Decision {
            outcome: Qualifier::Allow,
            reason: Reason::ExplicitAllow,
            matched_rules: allows,
        }
    } else {
        Decision {
            outcome: Qualifier::Deny,
            reason: Reason::DefaultDeny,
            matched_rules: Vec::new(),
        }
    };
    Ok(decision)
}

/// Short label used in diagnostics: `ALLOW (explicit_allow)`.
pub fn describe(decision: &Decision) -> String {
    let mut s = decision.outcome.as_str().to_string();
    s.push_str(" (");
    s.push_str(decision.reason.as_str());
    s.push(')');
    s
}
