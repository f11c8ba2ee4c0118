//! Scenario files and verification reports as JSON.

use std::collections::BTreeSet;

use armory_core::error::ScenarioError;
use armory_core::verify::{
    ClassCounts, EdgeSpec, LabelSource, ProbeRecord, ScenarioGraph, ScenarioSubject, TransportSetup,
    VerificationReport,
};
use armory_core::{ObjectKind, Verb};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioFileError {
    #[error("scenario is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown {what} `{value}`")]
    UnknownToken { what: &'static str, value: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectEntry {
    pub uri: String,
    #[serde(default)]
    pub node_services: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectEntry {
    pub kind: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub subject: String,
    pub verb: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub subjects: Vec<SubjectEntry>,
    #[serde(default)]
    pub objects: Vec<ObjectEntry>,
    #[serde(default)]
    pub edges: Vec<EdgeEntry>,
}

fn kind(s: &str) -> Result<ObjectKind, ScenarioFileError> {
    s.parse().map_err(|_| ScenarioFileError::UnknownToken {
        what: "object kind",
        value: s.to_string(),
    })
}

impl ScenarioFile {
    pub fn into_graph(self) -> Result<ScenarioGraph, ScenarioFileError> {
        let subjects = self
            .subjects
            .into_iter()
            .map(|s| ScenarioSubject {
                uri: s.uri,
                node_services: s.node_services,
            })
            .collect();
        let objects = self
            .objects
            .into_iter()
            .map(|o| Ok((kind(&o.kind)?, o.name)))
            .collect::<Result<Vec<_>, ScenarioFileError>>()?;
        let edges = self
            .edges
            .into_iter()
            .map(|e| {
                let verb: Verb = e.verb.parse().map_err(|_| ScenarioFileError::UnknownToken {
                    what: "verb",
                    value: e.verb.clone(),
                })?;
                Ok(EdgeSpec {
                    subject: e.subject,
                    verb,
                    kind: e.kind.as_deref().map(kind).transpose()?,
                    object: e.object,
                })
            })
            .collect::<Result<Vec<_>, ScenarioFileError>>()?;
        Ok(ScenarioGraph::new(subjects, objects, edges)?)
    }
}

pub fn parse_scenario(json: &str) -> Result<ScenarioGraph, ScenarioFileError> {
    serde_json::from_str::<ScenarioFile>(json)?.into_graph()
}

#[derive(Debug, Serialize)]
pub struct CountsJson {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl From<ClassCounts> for CountsJson {
    fn from(c: ClassCounts) -> Self {
        Self {
            tp: c.tp,
            tn: c.tn,
            fp: c.fp,
            fn_: c.fn_,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SummaryJson {
    pub semantic: CountsJson,
    pub transport: CountsJson,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct SetupJson {
    pub mapping: String,
    pub transport_model: String,
    pub domain: u32,
    pub at: String,
    pub amended: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct LegJson {
    pub action: String,
    pub topic: String,
    pub partitions: Vec<String>,
    pub value: String,
    pub grant: Option<usize>,
    pub rule: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct ProbeJson {
    pub subject: String,
    pub verb: String,
    pub kind: String,
    pub object: String,
    pub truth: String,
    pub semantic: String,
    pub transport: String,
    pub semantic_class: String,
    pub transport_class: String,
    pub matched_rules: Vec<String>,
    pub legs: Vec<LegJson>,
}

#[derive(Debug, Serialize)]
pub struct ReportJson {
    pub summary: SummaryJson,
    pub setup: SetupJson,
    pub probes: Vec<ProbeJson>,
}

fn verdict(allowed: bool) -> String {
    String::from(if allowed { "ALLOW" } else { "DENY" })
}

fn probe_json(r: &ProbeRecord) -> ProbeJson {
    ProbeJson {
        subject: r.probe.subject.clone(),
        verb: r.probe.verb.to_string(),
        kind: r.probe.kind.to_string(),
        object: r.probe.object.clone(),
        truth: verdict(r.truth),
        semantic: verdict(r.semantic),
        transport: verdict(r.transport),
        semantic_class: r.class(LabelSource::Semantic).to_string(),
        transport_class: r.class(LabelSource::Transport).to_string(),
        matched_rules: r.matched_rules.iter().map(ToString::to_string).collect(),
        legs: r
            .legs
            .iter()
            .map(|l| LegJson {
                action: l.request.action.to_string(),
                topic: l.request.topic.clone(),
                partitions: l.request.partitions.clone(),
                value: l.outcome.value.to_string(),
                grant: l.outcome.grant,
                rule: l.outcome.rule,
            })
            .collect(),
    }
}

pub fn report_json(report: &VerificationReport, setup: &TransportSetup, amended: &BTreeSet<String>) -> ReportJson {
    ReportJson {
        summary: SummaryJson {
            semantic: report.semantic.into(),
            transport: report.transport.into(),
            pass: report.pass,
        },
        setup: SetupJson {
            mapping: setup.mapping.to_string(),
            transport_model: setup.model.to_string(),
            domain: setup.domain,
            at: crate::clock::format_rfc3339(setup.at),
            amended: amended.iter().cloned().collect(),
        },
        probes: report.records.iter().map(probe_json).collect(),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json_text<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_scenario() {
        let g = parse_scenario(
            r#"{"subjects":[{"uri":"/a","node_services":["~/s"]}],
                "objects":[{"kind":"topic","name":"/t"}],
                "edges":[{"subject":"/a","verb":"publish","object":"/t"},
                         {"subject":"/a","verb":"reply","object":"~/s"}]}"#,
        )
        .unwrap();
        assert_eq!(g.edges().len(), 2);
        assert!(g.is_node_service(ObjectKind::Service, "/a/s"));
    }

    #[test]
    fn rejects_unknown_fields_and_tokens() {
        assert!(matches!(parse_scenario(r#"{"subject":[]}"#), Err(ScenarioFileError::Json(_))));
        assert!(matches!(
            parse_scenario(r#"{"objects":[{"kind":"queue","name":"/q"}]}"#),
            Err(ScenarioFileError::UnknownToken { .. })
        ));
    }
}
