//! The transport's default access control decision logic.
//!
//! Grants are scanned in order; the first grant whose subject name matches and
//! whose validity window contains the evaluation time decides. Inside it rules are
//! scanned in order and the first rule whose domain and criteria match returns its
//! qualifier; with no matching rule the grant default applies. When no grant
//! matches the outcome is `ERROR`.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::dds::{DdsAction, DdsCriteria, DdsRule, PermissionsDocument, Timestamp};
use crate::glob::glob_match;
use crate::policy::Qualifier;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransportRequest {
    pub subject_name: String,
    pub domain: u32,
    pub action: DdsAction,
    pub topic: String,
    /// Requested partitions; `""` is the default partition.
    pub partitions: Vec<String>,
    /// `key=value` tags.
    pub tags: Vec<String>,
    pub at: Timestamp,
}

impl TransportRequest {
    /// A request in a single partition with no tags.
    pub fn new(
        subject_name: impl Into<String>,
        domain: u32,
        action: DdsAction,
        topic: impl Into<String>,
        partition: impl Into<String>,
        at: Timestamp,
    ) -> Self {
        Self {
            subject_name: subject_name.into(),
            domain,
            action,
            topic: topic.into(),
            partitions: alloc::vec![partition.into()],
            tags: Vec::new(),
            at,
        }
    }

    fn requested_partitions(&self) -> impl Iterator<Item = &str> {
        let default: &[&str] = if self.partitions.is_empty() { &[""] } else { &[] };
        self.partitions
            .iter()
            .map(String::as_str)
            .chain(default.iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PdpValue {
    Allow,
    Deny,
    Error,
}

impl PdpValue {
    pub fn as_str(self) -> &'static str {
        match self {
            PdpValue::Allow => "ALLOW",
            PdpValue::Deny => "DENY",
            PdpValue::Error => "ERROR",
        }
    }

    /// ERROR is a refusal.
    pub fn is_allow(self) -> bool {
        self == PdpValue::Allow
    }
}

impl From<Qualifier> for PdpValue {
    fn from(q: Qualifier) -> Self {
        match q {
            Qualifier::Allow => PdpValue::Allow,
            Qualifier::Deny => PdpValue::Deny,
        }
    }
}

impl fmt::Display for PdpValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PdpOutcome {
    pub value: PdpValue,
    /// Grant that decided; absent for ERROR.
    pub grant: Option<usize>,
    /// Rule that decided; absent for ERROR and for the grant default.
    pub rule: Option<usize>,
}

impl PdpOutcome {
    pub const ERROR: PdpOutcome = PdpOutcome {
        value: PdpValue::Error,
        grant: None,
        rule: None,
    };
}

pub fn pdp_evaluate(doc: &PermissionsDocument, request: &TransportRequest) -> PdpOutcome {
    for (g, grant) in doc.grants().iter().enumerate() {
        let matched = glob_match(&grant.subject_name, &request.subject_name);
        let valid = grant.is_valid_at(request.at);
        if matched && valid {
            return match check_rules(&grant.rules, request) {
                None => PdpOutcome {
                    value: grant.default.into(),
                    grant: Some(g),
                    rule: None,
                },
                Some((r, qualifier)) => PdpOutcome {
                    value: qualifier.into(),
                    grant: Some(g),
                    rule: Some(r),
                },
            };
        }
    }
    PdpOutcome::ERROR
}

/// First rule whose domain set holds the request domain and whose criteria block
/// for the requested action matches. A rule without that block never matches.
pub fn check_rules(rules: &[DdsRule], request: &TransportRequest) -> Option<(usize, Qualifier)> {
    rules.iter().enumerate().find_map(|(i, rule)| {
        let domain = rule.domains.contains(&request.domain);
        let matched = rule
            .criteria(request.action)
            .is_some_and(|c| check_criteria(c, request));
        (domain && matched).then_some((i, rule.qualifier))
    })
}

/// Conjunction over criterion classes, each class satisfied when some expression
/// matches. Every requested partition and every requested tag must be covered.
pub fn check_criteria(criteria: &DdsCriteria, request: &TransportRequest) -> bool {
    let any = |exprs: &[String], value: &str| exprs.iter().any(|e| glob_match(e, value));

    let topics = criteria.topics.is_empty() || any(&criteria.topics, &request.topic);
    let partitions = if criteria.partitions.is_empty() {
        request.requested_partitions().all(str::is_empty)
    } else {
        request
            .requested_partitions()
            .all(|p| any(&criteria.partitions, p))
    };
    let tags = criteria.tags.is_empty() || request.tags.iter().all(|t| any(&criteria.tags, t));
    topics && partitions && tags
}
