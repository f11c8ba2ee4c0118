//! DDS-Security shaped permissions documents and the compiler that produces them.

mod compile;
mod fold;
mod mapping;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use compile::{compile_permissions, credential_subject_name, mangle_subject, CompileOptions};
pub use fold::{fold_rules, try_fold};
pub use mapping::{map_object, map_pattern, Leg, LegPattern, Channel};

use crate::error::DocumentError;
use crate::policy::Qualifier;

/// Seconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub const DAY: i64 = 86_400;

    pub fn plus_days(self, days: u32) -> Self {
        Timestamp(self.0 + i64::from(days) * Self::DAY)
    }
}

/// How ROS names are split onto DDS topics and partitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MappingMode {
    /// Namespace carried in the partition, last segment as topic.
    Ardent,
    /// Whole prefixed name as topic, default partition.
    Bouncy,
}

impl MappingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MappingMode::Ardent => "ardent",
            MappingMode::Bouncy => "bouncy",
        }
    }
}

impl fmt::Display for MappingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MappingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ardent" => Ok(MappingMode::Ardent),
            "bouncy" => Ok(MappingMode::Bouncy),
            other => Err(alloc::format!("unknown mapping mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DdsAction {
    Publish,
    Subscribe,
    Relay,
}

impl DdsAction {
    pub const ALL: [DdsAction; 3] = [DdsAction::Publish, DdsAction::Subscribe, DdsAction::Relay];

    pub fn as_str(self) -> &'static str {
        match self {
            DdsAction::Publish => "publish",
            DdsAction::Subscribe => "subscribe",
            DdsAction::Relay => "relay",
        }
    }
}

impl fmt::Display for DdsAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DdsAction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DdsAction::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| alloc::format!("unknown action `{s}`"))
    }
}

/// Topic, partition and tag expressions of one action block.
///
/// An empty `topics` or `tags` list places no constraint; an empty `partitions`
/// list admits only the default (empty-string) partition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DdsCriteria {
    pub topics: Vec<String>,
    pub partitions: Vec<String>,
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DdsRule {
    pub qualifier: Qualifier,
    pub domains: BTreeSet<u32>,
    pub publish: Option<DdsCriteria>,
    pub subscribe: Option<DdsCriteria>,
    pub relay: Option<DdsCriteria>,
    /// Identifiers of the source policy rules this rule was compiled from.
    pub sources: Vec<String>,
}

impl DdsRule {
    pub fn new(qualifier: Qualifier, domains: BTreeSet<u32>) -> Self {
        Self {
            qualifier,
            domains,
            publish: None,
            subscribe: None,
            relay: None,
            sources: Vec::new(),
        }
    }

    pub fn with_criteria(mut self, action: DdsAction, criteria: DdsCriteria) -> Self {
        *self.criteria_mut(action) = Some(criteria);
        self
    }

    pub fn criteria(&self, action: DdsAction) -> Option<&DdsCriteria> {
        match action {
            DdsAction::Publish => self.publish.as_ref(),
            DdsAction::Subscribe => self.subscribe.as_ref(),
            DdsAction::Relay => self.relay.as_ref(),
        }
    }

    pub fn criteria_mut(&mut self, action: DdsAction) -> &mut Option<DdsCriteria> {
        match action {
            DdsAction::Publish => &mut self.publish,
            DdsAction::Subscribe => &mut self.subscribe,
            DdsAction::Relay => &mut self.relay,
        }
    }

    /// Actions that carry a criteria block, in canonical order.
    pub fn actions(&self) -> impl Iterator<Item = DdsAction> + '_ {
        DdsAction::ALL.into_iter().filter(|a| self.criteria(*a).is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grant {
    pub name: String,
    pub subject_name: String,
    pub not_before: Timestamp,
    pub not_after: Timestamp,
    /// Evaluated first match wins.
    pub rules: Vec<DdsRule>,
    pub default: Qualifier,
}

impl Grant {
    pub fn is_valid_at(&self, at: Timestamp) -> bool {
        self.not_before <= at && at <= self.not_after
    }

    fn validate(&self) -> Result<(), DocumentError> {
        if self.not_before >= self.not_after {
            return Err(DocumentError::EmptyValidity(self.name.clone()));
        }
        for (i, rule) in self.rules.iter().enumerate() {
            if rule.actions().next().is_none() {
                return Err(DocumentError::NoCriteria {
                    grant: self.name.clone(),
                    rule: i,
                });
            }
            if rule.domains.is_empty() {
                return Err(DocumentError::NoDomains {
                    grant: self.name.clone(),
                    rule: i,
                });
            }
        }
        Ok(())
    }
}

/// A validated permissions document: at least one grant, every grant well formed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PermissionsDocument {
    grants: Vec<Grant>,
    source_digest: String,
}

impl PermissionsDocument {
    pub fn new(grants: Vec<Grant>, source_digest: impl Into<String>) -> Result<Self, DocumentError> {
        if grants.is_empty() {
            return Err(DocumentError::NoGrants);
        }
        grants.iter().try_for_each(Grant::validate)?;
        Ok(Self {
            grants,
            source_digest: source_digest.into(),
        })
    }

    pub fn grants(&self) -> &[Grant] {
        &self.grants
    }

    pub fn source_digest(&self) -> &str {
        &self.source_digest
    }

    pub fn into_parts(self) -> (Vec<Grant>, String) {
        (self.grants, self.source_digest)
    }

    /// Every rule of every grant, with `(grant, rule)` indices.
    pub fn rules(&self) -> impl Iterator<Item = (usize, usize, &DdsRule)> {
        self.grants
            .iter()
            .enumerate()
            .flat_map(|(g, grant)| grant.rules.iter().enumerate().map(move |(r, rule)| (g, r, rule)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grant(rules: Vec<DdsRule>) -> Grant {
        Grant {
            name: "g".into(),
            subject_name: "/s".into(),
            not_before: Timestamp(0),
            not_after: Timestamp(10),
            rules,
            default: Qualifier::Deny,
        }
    }

    #[test]
    fn empty_grants_rejected_at_construction() {
        assert_eq!(PermissionsDocument::new(vec![], ""), Err(DocumentError::NoGrants));
    }

    #[test]
    fn rule_invariants() {
        let bare = DdsRule::new(Qualifier::Allow, BTreeSet::from([0]));
        assert!(matches!(
            PermissionsDocument::new(vec![grant(vec![bare.clone()])], ""),
            Err(DocumentError::NoCriteria { .. })
        ));
        let no_domain = DdsRule::new(Qualifier::Allow, BTreeSet::new())
            .with_criteria(DdsAction::Publish, DdsCriteria::default());
        assert!(matches!(
            PermissionsDocument::new(vec![grant(vec![no_domain])], ""),
            Err(DocumentError::NoDomains { .. })
        ));
        let mut g = grant(vec![]);
        g.not_after = g.not_before;
        assert!(matches!(
            PermissionsDocument::new(vec![g], ""),
            Err(DocumentError::EmptyValidity(_))
        ));
        assert!(PermissionsDocument::new(vec![grant(vec![])], "").is_ok());
    }

    #[test]
    fn validity_is_inclusive() {
        let g = grant(vec![]);
        assert!(g.is_valid_at(Timestamp(0)));
        assert!(g.is_valid_at(Timestamp(10)));
        assert!(!g.is_valid_at(Timestamp(11)));
    }
}
