// Random policy generation and brute-force checks shared by the property tests
// and the acceptance suite.
#![allow(dead_code)]

use armory_core::dds::{compile_permissions, map_object, CompileOptions, MappingMode, PermissionsDocument, Timestamp};
use armory_core::error::CompileError;
use armory_core::pdp::{pdp_evaluate, TransportRequest};
use armory_core::{AccessRequest, AttachmentExpression, ObjectKind, PolicyProfile, PolicyRule, PolicyTree, Qualifier};
use proptest::prelude::*;
use proptest::sample::{select, subsequence, Index};

pub const SUBJECTS: &[&str] = &["/a", "/b", "/a/b", "/c"];
pub const OBJECT_NAMES: &[&str] = &["/a", "/b", "/a/b", "/b/c", "/c/a/b"];
pub const SUBJECT_GLOBS: &[&str] = &["/*", "/**", "/a/*", "/?", "/[ab]", "/a/**", "/**/b", "/[!a]*"];
pub const OBJECT_GLOBS: &[&str] = &[
    "/*", "/**", "/a/*", "/?", "/[ab]", "/a/**", "/**/b", "/*/c", "/b*", "~", "~/b", "~/*",
];

pub const AT: Timestamp = Timestamp(1_000_000);

pub fn kinds(with_actions: bool) -> Vec<ObjectKind> {
    ObjectKind::ALL
        .iter()
        .copied()
        .filter(|k| with_actions || *k != ObjectKind::Action)
        .collect()
}

fn attachment(names: &'static [&'static str], globs: &'static [&'static str]) -> impl Strategy<Value = AttachmentExpression> {
    prop_oneof![
        select(names).prop_map(|n| AttachmentExpression::exact(n).unwrap()),
        select(globs).prop_map(|g| AttachmentExpression::glob(g).unwrap()),
    ]
}

pub fn rule(with_actions: bool) -> impl Strategy<Value = PolicyRule> {
    let qualifier = prop_oneof![3 => Just(Qualifier::Allow), 1 => Just(Qualifier::Deny)];
    (qualifier, select(kinds(with_actions)))
        .prop_flat_map(|(q, kind)| {
            let verbs = kind.verbs().to_vec();
            let n = verbs.len();
            (
                Just(q),
                Just(kind),
                subsequence(verbs, 1..=n),
                prop::collection::vec(attachment(OBJECT_NAMES, OBJECT_GLOBS), 1..=2),
            )
        })
        .prop_map(|(q, kind, verbs, objects)| PolicyRule::new(q, kind, verbs, objects).unwrap())
}

/// Up to five profiles (nested at random) and up to ten rules.
pub fn policy_tree(with_actions: bool) -> impl Strategy<Value = PolicyTree> {
    let profiles = prop::collection::vec(
        (
            prop::collection::vec(attachment(SUBJECTS, SUBJECT_GLOBS), 1..=2),
            any::<Index>(),
            any::<bool>(),
        ),
        1..=5,
    );
    let rules = prop::collection::vec((any::<Index>(), rule(with_actions)), 0..=10);
    (profiles, rules).prop_map(|(profiles, rules)| {
        let n = profiles.len();
        let mut built: Vec<Option<PolicyProfile>> = profiles
            .iter()
            .enumerate()
            .map(|(i, (att, _, _))| Some(PolicyProfile::new(format!("p{i}"), att.clone())))
            .collect();
        for (at, r) in rules {
            let p = built[at.index(n)].as_mut().unwrap();
            p.rules.push(r);
        }
        let mut tree = PolicyTree::new("random");
        for i in (0..n).rev() {
            let (_, parent, nested) = &profiles[i];
            let profile = built[i].take().unwrap();
            if *nested && i > 0 {
                let p = parent.index(i);
                built[p].as_mut().unwrap().children.insert(0, profile);
            } else {
                tree.profiles.insert(0, profile);
            }
        }
        tree.validate().unwrap();
        tree
    })
}

/// Every legal probe over the fixed subject and object universe.
pub fn probe_universe(with_actions: bool) -> Vec<AccessRequest> {
    let mut out = Vec::new();
    for s in SUBJECTS {
        for kind in kinds(with_actions) {
            for o in OBJECT_NAMES {
                for &verb in kind.verbs() {
                    out.push(AccessRequest::new(*s, verb, kind, o).unwrap());
                }
            }
        }
    }
    out
}

pub fn compile_all(tree: &PolicyTree, mode: MappingMode, opts: &CompileOptions) -> Vec<(String, Option<PermissionsDocument>)> {
    SUBJECTS
        .iter()
        .map(|s| match compile_permissions(tree, s, mode, opts) {
            Ok(d) => (s.to_string(), Some(d)),
            Err(CompileError::NoApplicableProfile(_)) => (s.to_string(), None),
            Err(e) => panic!("compile failed for {s}: {e}"),
        })
        .collect()
}

/// Transport verdict for a probe: every leg must be allowed; no document or an
/// ERROR outcome is a refusal.
pub fn transport_allows(doc: Option<&PermissionsDocument>, probe: &AccessRequest, mode: MappingMode) -> bool {
    let Some(doc) = doc else { return false };
    map_object(probe.kind, &probe.object, probe.verb, mode)
        .unwrap()
        .into_iter()
        .all(|leg| {
            let r = TransportRequest::new(probe.subject.clone(), 0, leg.action, leg.topic, leg.partition, AT);
            pdp_evaluate(doc, &r).value.is_allow()
        })
}

/// Probes on which semantic and transport decisions differ.
pub fn faithfulness_violations(tree: &PolicyTree, mode: MappingMode, probes: &[AccessRequest]) -> Vec<String> {
    let opts = CompileOptions::at(AT);
    let docs = compile_all(tree, mode, &opts);
    let mut out = Vec::new();
    for p in probes {
        let doc = docs.iter().find(|(s, _)| *s == p.subject).and_then(|(_, d)| d.as_ref());
        let semantic = armory_core::evaluate_request(tree, p).unwrap().is_allow();
        let transport = transport_allows(doc, p, mode);
        if semantic != transport {
            out.push(format!("{p}: semantic {semantic}, transport {transport}"));
        }
    }
    out
}
