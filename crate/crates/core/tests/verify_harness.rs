use std::collections::{BTreeMap, BTreeSet};

use armory_core::dds::{compile_permissions, fold_rules, CompileOptions, MappingMode, Timestamp};
use armory_core::verify::{
    build_complete_graph, compare_labels, compile_scenario, extract_min_policy, gratuitous_allow_rules,
    label_semantic, label_transport, EdgeClass, EdgeSpec, LabelSource, ScenarioGraph, ScenarioSubject,
    TransportModel, TransportSetup,
};
use armory_core::{ObjectKind, PolicyTree, Verb};

fn scenario(n_subjects: usize, topics: &[&str], services: &[&str], params: &[&str], node_services: &[&str]) -> ScenarioGraph {
    let subjects = (0..n_subjects)
        .map(|i| ScenarioSubject {
            uri: format!("/n{i}"),
            node_services: node_services.iter().map(|s| s.to_string()).collect(),
        })
        .collect();
    let mut objects = Vec::new();
    objects.extend(topics.iter().map(|t| (ObjectKind::Topic, t.to_string())));
    objects.extend(services.iter().map(|t| (ObjectKind::Service, t.to_string())));
    objects.extend(params.iter().map(|t| (ObjectKind::Parameter, t.to_string())));
    ScenarioGraph::new(subjects, objects, vec![]).unwrap()
}

#[test]
fn probe_count_matches_closed_form() {
    for (n, t, s, p, ns) in [
        (1, 1, 0, 0, 0),
        (2, 3, 2, 1, 2),
        (3, 2, 1, 2, 6),
        (4, 0, 0, 0, 3),
    ] {
        let topics: Vec<String> = (0..t).map(|i| format!("/t{i}")).collect();
        let services: Vec<String> = (0..s).map(|i| format!("/s{i}")).collect();
        let params: Vec<String> = (0..p).map(|i| format!("/p{i}")).collect();
        let node: Vec<String> = (0..ns).map(|i| format!("~/srv{i}")).collect();
        fn refs(v: &[String]) -> Vec<&str> {
            v.iter().map(String::as_str).collect()
        }
        let sc = scenario(n, &refs(&topics), &refs(&services), &refs(&params), &refs(&node));
        // every subject's node services are objects visible to every subject
        let service_objects = s + n * ns;
        let expected = n * (t * 3 + service_objects * 2 + p * 2);
        let g = build_complete_graph(&sc);
        assert_eq!(g.probes.len(), expected);
        let unique: BTreeSet<_> = g.probes.iter().collect();
        assert_eq!(unique.len(), expected);
    }
}

#[test]
fn edges_are_probes() {
    let sc = ScenarioGraph::new(
        vec![ScenarioSubject { uri: "/a".into(), node_services: vec![] }],
        vec![(ObjectKind::Topic, "/t".into()), (ObjectKind::Service, "/s".into())],
        vec![
            EdgeSpec { subject: "/a".into(), verb: Verb::Relay, kind: None, object: "/t".into() },
            EdgeSpec { subject: "/a".into(), verb: Verb::Reply, kind: Some(ObjectKind::Service), object: "/s".into() },
        ],
    )
    .unwrap();
    let g = build_complete_graph(&sc);
    assert!(sc.edges().iter().all(|e| g.probes.contains(e)));
    let tree = extract_min_policy(&sc);
    assert_eq!(tree.profiles.len(), 1);
    assert_eq!(tree.profiles[0].rules.len(), 2);
}

#[test]
fn empty_policy_denies_everything() {
    let sc = scenario(2, &["/t"], &["/s"], &[], &["~/x"]);
    let g = build_complete_graph(&sc);
    let labels = label_semantic(&g, &PolicyTree::new("empty")).unwrap();
    assert!(labels.iter().all(|l| !l.allowed()));
}

fn crosstalk_scenario() -> ScenarioGraph {
    let objects = ["/foo/bar", "/baz/spam", "/baz/bar", "/foo/spam"]
        .iter()
        .map(|o| (ObjectKind::Topic, o.to_string()))
        .collect();
    ScenarioGraph::new(
        vec![ScenarioSubject { uri: "/s".into(), node_services: vec![] }],
        objects,
        vec![
            EdgeSpec { subject: "/s".into(), verb: Verb::Publish, kind: None, object: "/foo/bar".into() },
            EdgeSpec { subject: "/s".into(), verb: Verb::Publish, kind: None, object: "/baz/spam".into() },
        ],
    )
    .unwrap()
}

#[test]
fn fold_keeps_namespaces_apart() {
    let sc = crosstalk_scenario();
    let tree = extract_min_policy(&sc);
    let opts = CompileOptions::at(Timestamp(0));
    let doc = compile_permissions(&tree, "/s", MappingMode::Ardent, &opts).unwrap();
    let folded = fold_rules(&doc);
    assert_eq!(folded.grants()[0].rules.len(), 2);
    let docs = BTreeMap::from([("/s".to_string(), folded)]);
    let setup = TransportSetup::new(MappingMode::Ardent, TransportModel::Ideal, Timestamp(0));
    let g = build_complete_graph(&sc);
    let report = compare_labels(&sc, &label_semantic(&g, &tree).unwrap(), &label_transport(&sc, &g, &docs, &setup).unwrap()).unwrap();
    assert!(report.pass);
}

#[test]
fn minimal_policy_has_no_gratuitous_rules_but_padding_does() {
    let sc = crosstalk_scenario();
    let tree = extract_min_policy(&sc);
    let setup = TransportSetup::new(MappingMode::Ardent, TransportModel::Ideal, Timestamp(0));
    let docs = compile_scenario(&sc, &tree, MappingMode::Ardent, &CompileOptions::at(Timestamp(0)), &BTreeSet::new()).unwrap();
    assert!(gratuitous_allow_rules(&sc, &docs, &setup).unwrap().is_empty());

    let mut padded = tree.clone();
    let extra = armory_core::PolicyRule::new(
        armory_core::Qualifier::Allow,
        ObjectKind::Topic,
        [Verb::Subscribe],
        vec![armory_core::AttachmentExpression::glob("/**").unwrap()],
    )
    .unwrap();
    padded.profiles[0].rules.push(extra);
    let docs = compile_scenario(&sc, &padded, MappingMode::Ardent, &CompileOptions::at(Timestamp(0)), &BTreeSet::new()).unwrap();
    assert!(!gratuitous_allow_rules(&sc, &docs, &setup).unwrap().is_empty());
    let g = build_complete_graph(&sc);
    let report = compare_labels(&sc, &label_semantic(&g, &padded).unwrap(), &label_transport(&sc, &g, &docs, &setup).unwrap()).unwrap();
    assert!(report.counts(LabelSource::Transport).fp > 0);
    assert!(report.probes_in(LabelSource::Transport, EdgeClass::FalsePositive).all(|p| p.verb == Verb::Subscribe));
}
