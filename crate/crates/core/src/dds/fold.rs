//! Folding of adjacent compatible rules.
//!
//! Two adjacent rules fold when they share qualifier, domain set and the set of
//! actions they carry, and for every action block the merged block admits exactly
//! the union of what the two blocks admit:
//!
//! * equal partition sets: topics are unioned;
//! * equal topic sets and one partition set contained in the other: the larger
//!   partition set is kept.
//!
//! Anything else (distinct topics *and* distinct partitions) would let the
//! criteria cross product admit new (topic, partition) pairs, so it is left alone.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use super::{DdsCriteria, DdsRule, Grant, PermissionsDocument};

/// Partition expressions as a set, with an empty list standing for the default
/// partition.
fn partition_set(c: &DdsCriteria) -> BTreeSet<&str> {
    if c.partitions.is_empty() {
        BTreeSet::from([""])
    } else {
        c.partitions.iter().map(String::as_str).collect()
    }
}

fn string_set(v: &[String]) -> BTreeSet<&str> {
    v.iter().map(String::as_str).collect()
}

fn union_list(a: &[String], b: &[String]) -> Vec<String> {
    let mut out = a.to_vec();
    for s in b {
        if !out.contains(s) {
            out.push(s.clone());
        }
    }
    out
}

fn fold_criteria(a: &DdsCriteria, b: &DdsCriteria) -> Option<DdsCriteria> {
    if string_set(&a.tags) != string_set(&b.tags) {
        return None;
    }
    let (pa, pb) = (partition_set(a), partition_set(b));
    if pa == pb {
        // an empty topic list already admits every topic
        let topics = if a.topics.is_empty() || b.topics.is_empty() {
            Vec::new()
        } else {
            union_list(&a.topics, &b.topics)
        };
        return Some(DdsCriteria {
            topics,
            partitions: a.partitions.clone(),
            tags: a.tags.clone(),
        });
    }
    if string_set(&a.topics) == string_set(&b.topics) {
        let wider = if pa.is_subset(&pb) {
            b
        } else if pb.is_subset(&pa) {
            a
        } else {
            return None;
        };
        return Some(DdsCriteria {
            topics: a.topics.clone(),
            partitions: wider.partitions.clone(),
            tags: a.tags.clone(),
        });
    }
    None
}

/// Merges two rules if that provably changes no decision.
pub fn try_fold(a: &DdsRule, b: &DdsRule) -> Option<DdsRule> {
    if a.qualifier != b.qualifier || a.domains != b.domains {
        return None;
    }
    if !a.actions().eq(b.actions()) {
        return None;
    }
    let mut merged = DdsRule::new(a.qualifier, a.domains.clone());
    for action in a.actions() {
        let folded = fold_criteria(a.criteria(action)?, b.criteria(action)?)?;
        *merged.criteria_mut(action) = Some(folded);
    }
    merged.sources = union_list(&a.sources, &b.sources);
    Some(merged)
}

fn fold_grant(grant: &Grant) -> Grant {
    let mut rules: Vec<DdsRule> = Vec::with_capacity(grant.rules.len());
    for rule in &grant.rules {
        if let Some(last) = rules.last_mut() {
            if let Some(merged) = try_fold(last, rule) {
                *last = merged;
                continue;
            }
        }
        rules.push(rule.clone());
    }
    Grant {
        rules,
        ..grant.clone()
    }
}

/// Folds collapsible adjacent rules in every grant. Never increases the rule count.
pub fn fold_rules(doc: &PermissionsDocument) -> PermissionsDocument {
    let grants = doc.grants().iter().map(fold_grant).collect();
    PermissionsDocument::new(grants, doc.source_digest())
        .expect("folding preserves document invariants")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dds::{DdsAction, Timestamp};
    use crate::policy::Qualifier;
    use alloc::vec;

    fn publish(topic: &str, partition: &str) -> DdsRule {
        DdsRule::new(Qualifier::Allow, BTreeSet::from([0])).with_criteria(
            DdsAction::Publish,
            DdsCriteria {
                topics: vec![topic.into()],
                partitions: vec![partition.into()],
                tags: vec![],
            },
        )
    }

    fn doc(rules: Vec<DdsRule>) -> PermissionsDocument {
        PermissionsDocument::new(
            vec![Grant {
                name: "s".into(),
                subject_name: "/s".into(),
                not_before: Timestamp(0),
                not_after: Timestamp(1),
                rules,
                default: Qualifier::Deny,
            }],
            "",
        )
        .unwrap()
    }

    #[test]
    fn crosstalk_pair_not_folded() {
        let d = doc(vec![publish("bar", "rt/foo"), publish("spam", "rt/baz")]);
        assert_eq!(fold_rules(&d), d);
    }

    #[test]
    fn shared_namespace_folds() {
        let d = doc(vec![publish("a", "rt/foo"), publish("b", "rt/foo")]);
        let f = fold_rules(&d);
        let rules = &f.grants()[0].rules;
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].publish.as_ref().unwrap().topics, vec![String::from("a"), String::from("b")]);
    }

    #[test]
    fn single_rule_unchanged() {
        let d = doc(vec![publish("a", "rt")]);
        assert_eq!(fold_rules(&d), d);
    }

    #[test]
    fn different_qualifiers_stay_apart() {
        let mut deny = publish("a", "rt");
        deny.qualifier = Qualifier::Deny;
        let d = doc(vec![deny, publish("b", "rt")]);
        assert_eq!(fold_rules(&d).grants()[0].rules.len(), 2);
    }

    #[test]
    fn equal_topics_fold_only_when_partitions_nest() {
        let mut wide = publish("a", "rt/x");
        wide.publish.as_mut().unwrap().partitions.push("rt/y".into());
        let d = doc(vec![publish("a", "rt/x"), wide.clone()]);
        let f = fold_rules(&d);
        assert_eq!(f.grants()[0].rules.len(), 1);
        assert_eq!(f.grants()[0].rules[0].publish, wide.publish);

        let d = doc(vec![publish("a", "rt/x"), publish("a", "rt/y")]);
        assert_eq!(fold_rules(&d).grants()[0].rules.len(), 2);
    }
}
