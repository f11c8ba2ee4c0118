//! Complete-graph verification of a deployment scenario.
//!
//! A scenario lists subjects, objects and the intended edges. Every legal
//! `(subject, verb, object)` triple becomes a probe; probes are labelled once by
//! the semantic evaluator and once by the transport decision point over compiled
//! documents, and both label sets are compared against the intended edges.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

use crate::dds::{
    compile_permissions, credential_subject_name, map_object, mangle_subject, CompileOptions, DdsAction,
    MappingMode, PermissionsDocument, Timestamp,
};
use crate::error::{CompileError, ScenarioError, VerifyError};
use crate::eval::{applicable_rules, evaluate_request, AccessRequest, Decision};
use crate::glob::{expand_relative, AttachmentExpression};
use crate::pdp::{pdp_evaluate, PdpOutcome, TransportRequest};
use crate::policy::{ObjectKind, PolicyProfile, PolicyRule, PolicyTree, Qualifier, RuleId, Verb};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioSubject {
    pub uri: String,
    /// Service names the node exposes, usually `~/...`.
    pub node_services: Vec<String>,
}

/// An intended action as written in a scenario; `kind` may be left for lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSpec {
    pub subject: String,
    pub verb: Verb,
    pub kind: Option<ObjectKind>,
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioGraph {
    subjects: Vec<String>,
    objects: BTreeSet<(ObjectKind, String)>,
    /// Node-service object name to owning subject.
    node_services: BTreeMap<String, String>,
    edges: BTreeSet<AccessRequest>,
}

impl ScenarioGraph {
    pub fn new(
        subjects: Vec<ScenarioSubject>,
        objects: Vec<(ObjectKind, String)>,
        edges: Vec<EdgeSpec>,
    ) -> Result<Self, ScenarioError> {
        let mut graph = ScenarioGraph {
            subjects: Vec::new(),
            objects: BTreeSet::new(),
            node_services: BTreeMap::new(),
            edges: BTreeSet::new(),
        };
        for s in subjects {
            if !s.uri.starts_with('/') {
                return Err(ScenarioError::NotAbsolute(s.uri));
            }
            if graph.subjects.contains(&s.uri) {
                return Err(ScenarioError::DuplicateSubject(s.uri));
            }
            for service in &s.node_services {
                let name = expand_relative(service, &s.uri);
                if !name.starts_with('/') {
                    return Err(ScenarioError::NotAbsolute(name));
                }
                graph.objects.insert((ObjectKind::Service, name.clone()));
                graph.node_services.insert(name, s.uri.clone());
            }
            graph.subjects.push(s.uri);
        }
        for (kind, name) in objects {
            if !name.starts_with('/') {
                return Err(ScenarioError::NotAbsolute(name));
            }
            graph.objects.insert((kind, name));
        }
        for e in edges {
            let edge = graph.resolve_edge(e)?;
            graph.edges.insert(edge);
        }
        Ok(graph)
    }

    fn resolve_edge(&self, e: EdgeSpec) -> Result<AccessRequest, ScenarioError> {
        if !self.subjects.contains(&e.subject) {
            return Err(ScenarioError::UnknownSubject(e.subject));
        }
        let object = expand_relative(&e.object, &e.subject);
        let kinds: Vec<ObjectKind> = ObjectKind::ALL
            .iter()
            .copied()
            .filter(|k| e.kind.is_none_or(|want| want == *k))
            .filter(|k| self.objects.contains(&(*k, object.clone())))
            .collect();
        let kind = match kinds.as_slice() {
            [] => return Err(ScenarioError::UnknownObject(object)),
            [k] => *k,
            many => {
                let legal: Vec<_> = many.iter().filter(|k| k.allows(e.verb)).collect();
                match legal.as_slice() {
                    [k] => **k,
                    _ => return Err(ScenarioError::AmbiguousObject(object)),
                }
            }
        };
        if !kind.allows(e.verb) {
            return Err(ScenarioError::IllegalVerb { kind, verb: e.verb });
        }
        Ok(AccessRequest {
            subject: e.subject,
            kind,
            object,
            verb: e.verb,
        })
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    /// Declared objects plus every subject's node services.
    pub fn objects(&self) -> &BTreeSet<(ObjectKind, String)> {
        &self.objects
    }

    pub fn edges(&self) -> &BTreeSet<AccessRequest> {
        &self.edges
    }

    pub fn node_service_owner(&self, object: &str) -> Option<&str> {
        self.node_services.get(object).map(String::as_str)
    }

    pub fn is_node_service(&self, kind: ObjectKind, object: &str) -> bool {
        kind == ObjectKind::Service && self.node_services.contains_key(object)
    }

    /// Objects only the given subject is meant to touch.
    pub fn objects_intended_for(&self, subject: &str) -> BTreeSet<(ObjectKind, String)> {
        let mut users: BTreeMap<(ObjectKind, &str), BTreeSet<&str>> = BTreeMap::new();
        for e in &self.edges {
            users.entry((e.kind, &e.object)).or_default().insert(&e.subject);
        }
        users
            .into_iter()
            .filter(|(_, who)| who.len() == 1 && who.contains(subject))
            .map(|((k, o), _)| (k, o.to_string()))
            .collect()
    }
}

/// Every legal probe over the scenario, ordered by subject (declaration order),
/// object kind, object name and verb.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompleteGraph {
    pub probes: Vec<AccessRequest>,
}

pub fn build_complete_graph(scenario: &ScenarioGraph) -> CompleteGraph {
    let mut probes = Vec::new();
    for subject in &scenario.subjects {
        for kind in ObjectKind::ALL {
            for (_, object) in scenario.objects.iter().filter(|(k, _)| *k == kind) {
                for &verb in kind.verbs() {
                    probes.push(AccessRequest {
                        subject: subject.clone(),
                        kind,
                        object: object.clone(),
                        verb,
                    });
                }
            }
        }
    }
    CompleteGraph { probes }
}

/// The smallest policy granting exactly the scenario edges: one profile per
/// subject with one ALLOW rule per edge.
pub fn extract_min_policy(scenario: &ScenarioGraph) -> PolicyTree {
    let mut tree = PolicyTree::new("extracted");
    let mut used: BTreeSet<String> = BTreeSet::new();
    for subject in &scenario.subjects {
        let base = mangle_subject(subject);
        let base = if base.is_empty() { String::from("root") } else { base };
        let mut name = base.clone();
        let mut n = 1;
        while !used.insert(name.clone()) {
            n += 1;
            name = alloc::format!("{base}_{n}");
        }
        let attach = AttachmentExpression::exact(subject.clone()).expect("subjects are absolute");
        let mut profile = PolicyProfile::new(name, alloc::vec![attach]);
        for edge in scenario.edges.iter().filter(|e| &e.subject == subject) {
            let object = AttachmentExpression::exact(edge.object.clone()).expect("objects are absolute");
            let rule = PolicyRule::new(Qualifier::Allow, edge.kind, [edge.verb], alloc::vec![object])
                .expect("scenario edges carry legal verbs");
            profile = profile.with_rule(rule);
        }
        tree = tree.with_profile(profile);
    }
    tree
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticLabel {
    pub probe: AccessRequest,
    pub decision: Decision,
}

impl SemanticLabel {
    pub fn allowed(&self) -> bool {
        self.decision.is_allow()
    }
}

pub fn label_semantic(graph: &CompleteGraph, tree: &PolicyTree) -> Result<Vec<SemanticLabel>, VerifyError> {
    graph
        .probes
        .iter()
        .map(|probe| {
            Ok(SemanticLabel {
                probe: probe.clone(),
                decision: evaluate_request(tree, probe)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TransportModel {
    /// Every leg is issued in its mapped partition.
    Ideal,
    /// Legs of node-service probes are issued in the default partition, as
    /// nodes do while their services come up.
    ArdentStartup,
}

impl TransportModel {
    pub fn as_str(self) -> &'static str {
        match self {
            TransportModel::Ideal => "ideal",
            TransportModel::ArdentStartup => "ardent_startup",
        }
    }
}

impl fmt::Display for TransportModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for TransportModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ideal" => Ok(TransportModel::Ideal),
            "ardent_startup" => Ok(TransportModel::ArdentStartup),
            _ => Err(alloc::format!("unknown transport model `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportSetup {
    pub mapping: MappingMode,
    pub model: TransportModel,
    pub domain: u32,
    pub at: Timestamp,
}

impl TransportSetup {
    pub fn new(mapping: MappingMode, model: TransportModel, at: Timestamp) -> Self {
        Self {
            mapping,
            model,
            domain: 0,
            at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LegOutcome {
    pub request: TransportRequest,
    pub outcome: PdpOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportLabel {
    pub probe: AccessRequest,
    pub legs: Vec<LegOutcome>,
}

impl TransportLabel {
    /// All legs must be allowed; ERROR counts as a refusal.
    pub fn allowed(&self) -> bool {
        !self.legs.is_empty() && self.legs.iter().all(|l| l.outcome.value.is_allow())
    }
}

/// Transport requests a probe issues under the given setup.
pub fn probe_requests(
    scenario: &ScenarioGraph,
    probe: &AccessRequest,
    setup: &TransportSetup,
) -> Result<Vec<TransportRequest>, VerifyError> {
    let startup = setup.model == TransportModel::ArdentStartup && scenario.is_node_service(probe.kind, &probe.object);
    Ok(map_object(probe.kind, &probe.object, probe.verb, setup.mapping)?
        .into_iter()
        .map(|leg| {
            let partition = if startup { String::new() } else { leg.partition };
            TransportRequest::new(
                credential_subject_name(&probe.subject),
                setup.domain,
                leg.action,
                leg.topic,
                partition,
                setup.at,
            )
        })
        .collect())
}

pub fn label_transport(
    scenario: &ScenarioGraph,
    graph: &CompleteGraph,
    docs: &BTreeMap<String, PermissionsDocument>,
    setup: &TransportSetup,
) -> Result<Vec<TransportLabel>, VerifyError> {
    if let Some(s) = scenario.subjects.iter().find(|s| !docs.contains_key(*s)) {
        return Err(VerifyError::MissingDocument(s.clone()));
    }
    graph
        .probes
        .iter()
        .map(|probe| {
            let doc = docs
                .get(&probe.subject)
                .ok_or_else(|| VerifyError::MissingDocument(probe.subject.clone()))?;
            let legs = probe_requests(scenario, probe, setup)?
                .into_iter()
                .map(|request| LegOutcome {
                    outcome: pdp_evaluate(doc, &request),
                    request,
                })
                .collect();
            Ok(TransportLabel {
                probe: probe.clone(),
                legs,
            })
        })
        .collect()
}

/// Compiles one document per scenario subject. Subjects listed in `amend` get
/// the empty-partition amendment. Subjects without an applicable profile are
/// left out.
pub fn compile_scenario(
    scenario: &ScenarioGraph,
    tree: &PolicyTree,
    mapping: MappingMode,
    opts: &CompileOptions,
    amend: &BTreeSet<String>,
) -> Result<BTreeMap<String, PermissionsDocument>, CompileError> {
    let mut docs = BTreeMap::new();
    for subject in &scenario.subjects {
        let opts = CompileOptions {
            amend_empty_partition: opts.amend_empty_partition || amend.contains(subject),
            ..opts.clone()
        };
        match compile_permissions(tree, subject, mapping, &opts) {
            Ok(doc) => {
                docs.insert(subject.clone(), doc);
            }
            Err(CompileError::NoApplicableProfile(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(docs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeClass {
    TruePositive,
    TrueNegative,
    FalsePositive,
    FalseNegative,
}

impl EdgeClass {
    pub fn of(label: bool, truth: bool) -> Self {
        match (label, truth) {
            (true, true) => EdgeClass::TruePositive,
            (false, false) => EdgeClass::TrueNegative,
            (true, false) => EdgeClass::FalsePositive,
            (false, true) => EdgeClass::FalseNegative,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeClass::TruePositive => "TP",
            EdgeClass::TrueNegative => "TN",
            EdgeClass::FalsePositive => "FP",
            EdgeClass::FalseNegative => "FN",
        }
    }

    /// Label agrees with the intended deployment.
    pub fn is_true(self) -> bool {
        matches!(self, EdgeClass::TruePositive | EdgeClass::TrueNegative)
    }
}

impl fmt::Display for EdgeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LabelSource {
    Semantic,
    Transport,
}

impl LabelSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelSource::Semantic => "semantic",
            LabelSource::Transport => "transport",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ClassCounts {
    fn add(&mut self, class: EdgeClass) {
        match class {
            EdgeClass::TruePositive => self.tp += 1,
            EdgeClass::TrueNegative => self.tn += 1,
            EdgeClass::FalsePositive => self.fp += 1,
            EdgeClass::FalseNegative => self.fn_ += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeRecord {
    pub probe: AccessRequest,
    pub truth: bool,
    pub semantic: bool,
    pub transport: bool,
    pub semantic_class: EdgeClass,
    pub transport_class: EdgeClass,
    pub matched_rules: Vec<RuleId>,
    pub legs: Vec<LegOutcome>,
}

impl ProbeRecord {
    pub fn label(&self, source: LabelSource) -> bool {
        match source {
            LabelSource::Semantic => self.semantic,
            LabelSource::Transport => self.transport,
        }
    }

    pub fn class(&self, source: LabelSource) -> EdgeClass {
        match source {
            LabelSource::Semantic => self.semantic_class,
            LabelSource::Transport => self.transport_class,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub records: Vec<ProbeRecord>,
    pub semantic: ClassCounts,
    pub transport: ClassCounts,
    pub pass: bool,
}

impl VerificationReport {
    pub fn counts(&self, source: LabelSource) -> ClassCounts {
        match source {
            LabelSource::Semantic => self.semantic,
            LabelSource::Transport => self.transport,
        }
    }

    pub fn probes_in(&self, source: LabelSource, class: EdgeClass) -> impl Iterator<Item = &AccessRequest> {
        self.records
            .iter()
            .filter(move |r| r.class(source) == class)
            .map(|r| &r.probe)
    }
}

/// Classifies every probe against the scenario edges. Both label sequences must
/// cover the same probes in the same order.
pub fn compare_labels(
    scenario: &ScenarioGraph,
    semantic: &[SemanticLabel],
    transport: &[TransportLabel],
) -> Result<VerificationReport, VerifyError> {
    if semantic.len() != transport.len() || semantic.iter().zip(transport).any(|(s, t)| s.probe != t.probe) {
        return Err(VerifyError::DomainMismatch);
    }
    let mut report = VerificationReport {
        records: Vec::with_capacity(semantic.len()),
        semantic: ClassCounts::default(),
        transport: ClassCounts::default(),
        pass: true,
    };
    let mut seen = BTreeSet::new();
    for (s, t) in semantic.iter().zip(transport) {
        let truth = scenario.edges.contains(&s.probe);
        if truth {
            seen.insert(&s.probe);
        }
        let (sem, tp) = (s.allowed(), t.allowed());
        let record = ProbeRecord {
            probe: s.probe.clone(),
            truth,
            semantic: sem,
            transport: tp,
            semantic_class: EdgeClass::of(sem, truth),
            transport_class: EdgeClass::of(tp, truth),
            matched_rules: s.decision.matched_rules.clone(),
            legs: t.legs.clone(),
        };
        report.semantic.add(record.semantic_class);
        report.transport.add(record.transport_class);
        report.pass &= record.semantic_class.is_true() && record.transport_class.is_true();
        report.records.push(record);
    }
    // an edge outside the probe set can never be confirmed
    if seen.len() != scenario.edges.len() {
        return Err(VerifyError::DomainMismatch);
    }
    Ok(report)
}

/// Labels the complete graph both ways and compares.
pub fn verify_scenario(
    scenario: &ScenarioGraph,
    tree: &PolicyTree,
    docs: &BTreeMap<String, PermissionsDocument>,
    setup: &TransportSetup,
) -> Result<VerificationReport, VerifyError> {
    let graph = build_complete_graph(scenario);
    let semantic = label_semantic(&graph, tree)?;
    let transport = label_transport(scenario, &graph, docs, setup)?;
    compare_labels(scenario, &semantic, &transport)
}

/// ALLOW rules whose removal leaves every scenario edge of their subject allowed
/// at the transport, as `(subject, rule index)`.
pub fn gratuitous_allow_rules(
    scenario: &ScenarioGraph,
    docs: &BTreeMap<String, PermissionsDocument>,
    setup: &TransportSetup,
) -> Result<Vec<(String, usize)>, VerifyError> {
    let mut out = Vec::new();
    for (subject, doc) in docs {
        let edges: Vec<Vec<TransportRequest>> = scenario
            .edges
            .iter()
            .filter(|e| &e.subject == subject)
            .map(|e| probe_requests(scenario, e, setup))
            .collect::<Result<_, _>>()?;
        for (g, r, rule) in doc.rules() {
            if rule.qualifier != Qualifier::Allow {
                continue;
            }
            let reduced = without_rule(doc, g, r);
            let still_fine = edges
                .iter()
                .all(|legs| legs.iter().all(|l| pdp_evaluate(&reduced, l).value.is_allow()));
            if still_fine {
                out.push((subject.clone(), index_of(doc, g, r)));
            }
        }
    }
    Ok(out)
}

fn without_rule(doc: &PermissionsDocument, g: usize, r: usize) -> PermissionsDocument {
    let mut grants = doc.grants().to_vec();
    grants[g].rules.remove(r);
    PermissionsDocument::new(grants, doc.source_digest()).expect("removing a rule keeps the grant list")
}

/// Flat rule index across grants.
fn index_of(doc: &PermissionsDocument, g: usize, r: usize) -> usize {
    doc.grants()[..g].iter().map(|gr| gr.rules.len()).sum::<usize>() + r
}

/// Flat indices of rules whose sources do not all name a rule applicable to
/// `subject` (or that carry no source at all).
pub fn untraceable_rules(tree: &PolicyTree, subject: &str, doc: &PermissionsDocument) -> Result<Vec<usize>, VerifyError> {
    let ids: BTreeSet<String> = applicable_rules(tree, subject)?
        .into_iter()
        .map(|(id, _)| id.to_string())
        .collect();
    Ok(doc
        .rules()
        .filter(|(_, _, rule)| rule.sources.is_empty() || rule.sources.iter().any(|s| !ids.contains(s)))
        .map(|(g, r, _)| index_of(doc, g, r))
        .collect())
}

/// Requests for every (topic, partition) pair that literally appears under the
/// same action anywhere in the document, plus the default partition.
pub fn crosstalk_probes(doc: &PermissionsDocument, domain: u32, at: Timestamp) -> Vec<TransportRequest> {
    let mut out = BTreeSet::new();
    for grant in doc.grants() {
        for action in DdsAction::ALL {
            let mut topics = BTreeSet::new();
            let mut partitions = BTreeSet::from([String::new()]);
            for c in grant.rules.iter().filter_map(|r| r.criteria(action)) {
                topics.extend(c.topics.iter().cloned());
                partitions.extend(c.partitions.iter().cloned());
            }
            for t in &topics {
                for p in &partitions {
                    out.insert(TransportRequest::new(grant.subject_name.clone(), domain, action, t.clone(), p.clone(), at));
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Requests on which two documents decide differently.
pub fn decision_differences<'a>(
    a: &PermissionsDocument,
    b: &PermissionsDocument,
    requests: &'a [TransportRequest],
) -> Vec<&'a TransportRequest> {
    requests
        .iter()
        .filter(|r| pdp_evaluate(a, r).value != pdp_evaluate(b, r).value)
        .collect()
}

fn dot_id(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Graphviz rendering of one label source: green allowed, red denied, dashed
/// when the label agrees with the scenario, solid when it does not.
pub fn report_to_dot(report: &VerificationReport, source: LabelSource) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "digraph {} {{", source.as_str());
    let _ = writeln!(s, "    rankdir=LR;");
    let mut subjects = BTreeSet::new();
    let mut objects = BTreeSet::new();
    for r in &report.records {
        subjects.insert(r.probe.subject.as_str());
        objects.insert((r.probe.kind, r.probe.object.as_str()));
    }
    for subj in &subjects {
        let _ = writeln!(s, "    {} [shape=box];", dot_id(subj));
    }
    for (kind, name) in &objects {
        let id = alloc::format!("{kind}:{name}");
        let _ = writeln!(s, "    {} [shape=ellipse, label={}];", dot_id(&id), dot_id(name));
    }
    for r in &report.records {
        let color = if r.label(source) { "green" } else { "red" };
        let style = if r.class(source).is_true() { "dashed" } else { "solid" };
        let obj = alloc::format!("{}:{}", r.probe.kind, r.probe.object);
        let _ = writeln!(
            s,
            "    {} -> {} [label={}, color={color}, style={style}];",
            dot_id(&r.probe.subject),
            dot_id(&obj),
            dot_id(r.probe.verb.as_str()),
        );
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn subject(uri: &str, services: &[&str]) -> ScenarioSubject {
        ScenarioSubject {
            uri: uri.into(),
            node_services: services.iter().map(|s| (*s).into()).collect(),
        }
    }

    fn edge(subject: &str, verb: Verb, object: &str) -> EdgeSpec {
        EdgeSpec {
            subject: subject.into(),
            verb,
            kind: None,
            object: object.into(),
        }
    }

    fn talker_listener() -> ScenarioGraph {
        ScenarioGraph::new(
            vec![subject("/talker", &["~/get_parameters"]), subject("/listener", &["~/get_parameters"])],
            vec![(ObjectKind::Topic, "/chatter".into())],
            vec![
                edge("/talker", Verb::Publish, "/chatter"),
                edge("/listener", Verb::Subscribe, "/chatter"),
                edge("/talker", Verb::Call, "~/get_parameters"),
                edge("/talker", Verb::Reply, "~/get_parameters"),
                edge("/listener", Verb::Call, "~/get_parameters"),
                edge("/listener", Verb::Reply, "~/get_parameters"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn two_subjects_one_topic_six_probes() {
        let s = ScenarioGraph::new(
            vec![subject("/a", &[]), subject("/b", &[])],
            vec![(ObjectKind::Topic, "/t".into())],
            vec![],
        )
        .unwrap();
        assert_eq!(build_complete_graph(&s).probes.len(), 6);
    }

    #[test]
    fn edge_errors() {
        let subjects = || vec![subject("/a", &[])];
        let objects = || vec![(ObjectKind::Topic, "/t".into())];
        assert_eq!(
            ScenarioGraph::new(subjects(), objects(), vec![edge("/b", Verb::Publish, "/t")]),
            Err(ScenarioError::UnknownSubject("/b".into()))
        );
        assert_eq!(
            ScenarioGraph::new(subjects(), objects(), vec![edge("/a", Verb::Publish, "/u")]),
            Err(ScenarioError::UnknownObject("/u".into()))
        );
        assert!(matches!(
            ScenarioGraph::new(subjects(), objects(), vec![edge("/a", Verb::Call, "/t")]),
            Err(ScenarioError::IllegalVerb { .. })
        ));
        assert_eq!(
            ScenarioGraph::new(vec![subject("/a", &[]), subject("/a", &[])], vec![], vec![]),
            Err(ScenarioError::DuplicateSubject("/a".into()))
        );
    }

    #[test]
    fn extracted_policy_is_minimal() {
        let s = talker_listener();
        let tree = extract_min_policy(&s);
        assert_eq!(tree.profiles.len(), 2);
        let labels = label_semantic(&build_complete_graph(&s), &tree).unwrap();
        for l in &labels {
            assert_eq!(l.allowed(), s.edges().contains(&l.probe), "{}", l.probe);
        }
        let cross = AccessRequest::new("/listener", Verb::Publish, ObjectKind::Topic, "/chatter").unwrap();
        assert!(!evaluate_request(&tree, &cross).unwrap().is_allow());
    }

    #[test]
    fn empty_scenario() {
        let s = ScenarioGraph::new(vec![], vec![], vec![]).unwrap();
        assert!(extract_min_policy(&s).profiles.is_empty());
        assert!(build_complete_graph(&s).probes.is_empty());
    }

    fn run(model: TransportModel, amend: &[&str]) -> VerificationReport {
        let s = talker_listener();
        let tree = extract_min_policy(&s);
        let amend = amend.iter().map(|a| String::from(*a)).collect();
        let docs = compile_scenario(&s, &tree, MappingMode::Ardent, &CompileOptions::default(), &amend).unwrap();
        verify_scenario(&s, &tree, &docs, &TransportSetup::new(MappingMode::Ardent, model, Timestamp(0))).unwrap()
    }

    #[test]
    fn ideal_model_passes() {
        let r = run(TransportModel::Ideal, &[]);
        assert!(r.pass);
        assert_eq!((r.transport.fp, r.transport.fn_), (0, 0));
    }

    #[test]
    fn startup_model_without_amendment_denies_node_services() {
        let r = run(TransportModel::ArdentStartup, &[]);
        assert!(!r.pass);
        assert_eq!(r.transport.fp, 0);
        assert_eq!(r.transport.fn_, 4);
    }

    #[test]
    fn talker_amendment_leaks_onto_listener() {
        let r = run(TransportModel::ArdentStartup, &["/talker"]);
        assert!(!r.pass);
        let fps: Vec<_> = r.probes_in(LabelSource::Transport, EdgeClass::FalsePositive).collect();
        assert!(!fps.is_empty());
        assert!(fps.iter().all(|p| p.subject == "/talker" && p.object.starts_with("/listener/")));
        assert!(r
            .probes_in(LabelSource::Transport, EdgeClass::FalseNegative)
            .all(|p| p.subject == "/listener"));
    }

    #[test]
    fn missing_document() {
        let s = talker_listener();
        let g = build_complete_graph(&s);
        let setup = TransportSetup::new(MappingMode::Ardent, TransportModel::Ideal, Timestamp(0));
        assert_eq!(
            label_transport(&s, &g, &BTreeMap::new(), &setup),
            Err(VerifyError::MissingDocument("/talker".into()))
        );
    }

    #[test]
    fn domain_mismatch() {
        let s = talker_listener();
        let g = build_complete_graph(&s);
        let sem = label_semantic(&g, &extract_min_policy(&s)).unwrap();
        assert_eq!(compare_labels(&s, &sem[1..], &[]), Err(VerifyError::DomainMismatch));
    }

    #[test]
    fn dot_output_marks_classes() {
        let r = run(TransportModel::ArdentStartup, &[]);
        let dot = report_to_dot(&r, LabelSource::Transport);
        assert!(dot.starts_with("digraph transport {"));
        assert!(dot.contains("color=red, style=solid"));
        assert!(dot.contains("color=green, style=dashed"));
    }
}
