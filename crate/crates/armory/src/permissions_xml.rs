//! Permissions documents as DDS-Security-shaped XML.
//!
//! Output is canonical: fixed element order, two-space indentation, LF line
//! endings and RFC 3339 UTC timestamps, so equal documents serialize to equal
//! bytes. A rule's provenance travels in its `source` attribute and the policy
//! slice digest in the root `source_digest` attribute.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use armory_core::dds::{DdsAction, DdsCriteria, DdsRule, Grant, PermissionsDocument};
use armory_core::error::DocumentError;
use armory_core::Qualifier;
use roxmltree::{Document, Node};
use thiserror::Error;

use crate::clock::{format_rfc3339, parse_rfc3339};
use crate::xml::{elements, escape, position, text};

#[derive(Debug, Error)]
pub enum PermissionsFormatError {
    #[error("line {line}, column {col}: malformed document: {message}")]
    Malformed { line: u32, col: u32, message: String },
    #[error("line {line}, column {col}: {message}")]
    Schema { line: u32, col: u32, message: String },
    #[error(transparent)]
    Invalid(#[from] DocumentError),
}

fn write_list(out: &mut String, pad: &str, outer: &str, inner: &str, items: &[String]) {
    if items.is_empty() {
        return;
    }
    let _ = writeln!(out, "{pad}<{outer}>");
    for i in items {
        if i.is_empty() {
            let _ = writeln!(out, "{pad}  <{inner}/>");
        } else {
            let _ = writeln!(out, "{pad}  <{inner}>{}</{inner}>", escape(i));
        }
    }
    let _ = writeln!(out, "{pad}</{outer}>");
}

fn write_criteria(out: &mut String, action: DdsAction, c: &DdsCriteria) {
    let pad = "        ";
    let _ = writeln!(out, "      <{action}>");
    write_list(out, pad, "topics", "topic", &c.topics);
    write_list(out, pad, "partitions", "partition", &c.partitions);
    write_list(out, pad, "data_tags", "tag", &c.tags);
    let _ = writeln!(out, "      </{action}>");
}

fn rule_element(q: Qualifier) -> &'static str {
    match q {
        Qualifier::Allow => "allow_rule",
        Qualifier::Deny => "deny_rule",
    }
}

pub fn write_permissions(doc: &PermissionsDocument) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<permissions source_digest=\"{}\">", escape(doc.source_digest()));
    for g in doc.grants() {
        let _ = writeln!(out, "  <grant name=\"{}\">", escape(&g.name));
        let _ = writeln!(out, "    <subject_name>{}</subject_name>", escape(&g.subject_name));
        let _ = writeln!(out, "    <validity>");
        let _ = writeln!(out, "      <not_before>{}</not_before>", format_rfc3339(g.not_before));
        let _ = writeln!(out, "      <not_after>{}</not_after>", format_rfc3339(g.not_after));
        let _ = writeln!(out, "    </validity>");
        for r in &g.rules {
            let el = rule_element(r.qualifier);
            if r.sources.is_empty() {
                let _ = writeln!(out, "    <{el}>");
            } else {
                let _ = writeln!(out, "    <{el} source=\"{}\">", escape(&r.sources.join(" ")));
            }
            let _ = writeln!(out, "      <domains>");
            for d in &r.domains {
                let _ = writeln!(out, "        <id>{d}</id>");
            }
            let _ = writeln!(out, "      </domains>");
            for a in r.actions() {
                write_criteria(&mut out, a, r.criteria(a).expect("listed action"));
            }
            let _ = writeln!(out, "    </{el}>");
        }
        let _ = writeln!(out, "    <default>{}</default>", g.default);
        let _ = writeln!(out, "  </grant>");
    }
    out.push_str("</permissions>\n");
    out
}

fn schema(node: Node<'_, '_>, message: impl Into<String>) -> PermissionsFormatError {
    let (line, col) = position(node);
    PermissionsFormatError::Schema {
        line,
        col,
        message: message.into(),
    }
}

fn only(node: Node<'_, '_>, expected: &str) -> Result<(), PermissionsFormatError> {
    if node.tag_name().name() == expected {
        Ok(())
    } else {
        Err(schema(node, format!("expected <{expected}>, found <{}>", node.tag_name().name())))
    }
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Result<Node<'a, 'i>, PermissionsFormatError> {
    let mut found = elements(node).filter(|c| c.tag_name().name() == name);
    let first = found
        .next()
        .ok_or_else(|| schema(node, format!("<{}> requires <{name}>", node.tag_name().name())))?;
    if let Some(dup) = found.next() {
        return Err(schema(dup, format!("duplicate <{name}>")));
    }
    Ok(first)
}

fn items(node: Node<'_, '_>, inner: &str) -> Result<Vec<String>, PermissionsFormatError> {
    elements(node)
        .map(|c| {
            only(c, inner)?;
            Ok(text(c).trim().to_string())
        })
        .collect()
}

fn timestamp(node: Node<'_, '_>) -> Result<armory_core::Timestamp, PermissionsFormatError> {
    parse_rfc3339(&text(node)).map_err(|m| schema(node, m))
}

fn criteria(node: Node<'_, '_>) -> Result<DdsCriteria, PermissionsFormatError> {
    let mut c = DdsCriteria::default();
    for el in elements(node) {
        match el.tag_name().name() {
            "topics" => c.topics = items(el, "topic")?,
            "partitions" => c.partitions = items(el, "partition")?,
            "data_tags" => c.tags = items(el, "tag")?,
            other => return Err(schema(el, format!("unexpected element <{other}>"))),
        }
    }
    Ok(c)
}

fn rule(node: Node<'_, '_>, qualifier: Qualifier) -> Result<DdsRule, PermissionsFormatError> {
    let mut domains = BTreeSet::new();
    let mut rule = DdsRule::new(qualifier, BTreeSet::new());
    let mut seen_domains = false;
    for el in elements(node) {
        let name = el.tag_name().name();
        if name == "domains" {
            if seen_domains {
                return Err(schema(el, "duplicate <domains>"));
            }
            seen_domains = true;
            for id in elements(el) {
                only(id, "id")?;
                let v = text(id).trim().parse::<u32>().map_err(|e| schema(id, format!("domain id: {e}")))?;
                domains.insert(v);
            }
            continue;
        }
        let action: DdsAction = name.parse().map_err(|_| schema(el, format!("unexpected element <{name}>")))?;
        if rule.criteria(action).is_some() {
            return Err(schema(el, format!("duplicate <{name}>")));
        }
        *rule.criteria_mut(action) = Some(criteria(el)?);
    }
    if !seen_domains {
        return Err(schema(node, "rule requires <domains>"));
    }
    rule.domains = domains;
    rule.sources = node
        .attribute("source")
        .map(|s| s.split_whitespace().map(str::to_string).collect())
        .unwrap_or_default();
    Ok(rule)
}

fn grant(node: Node<'_, '_>) -> Result<Grant, PermissionsFormatError> {
    only(node, "grant")?;
    let name = node.attribute("name").ok_or_else(|| schema(node, "<grant> requires attribute `name`"))?;
    let validity = child(node, "validity")?;
    let default_node = child(node, "default")?;
    let default: Qualifier = text(default_node)
        .trim()
        .parse()
        .map_err(|_| schema(default_node, "default must be ALLOW or DENY"))?;
    let mut rules = Vec::new();
    for el in elements(node) {
        match el.tag_name().name() {
            "allow_rule" => rules.push(rule(el, Qualifier::Allow)?),
            "deny_rule" => rules.push(rule(el, Qualifier::Deny)?),
            "subject_name" | "validity" | "default" => {}
            other => return Err(schema(el, format!("unexpected element <{other}> in <grant>"))),
        }
    }
    Ok(Grant {
        name: name.to_string(),
        subject_name: text(child(node, "subject_name")?).trim().to_string(),
        not_before: timestamp(child(validity, "not_before")?)?,
        not_after: timestamp(child(validity, "not_after")?)?,
        rules,
        default,
    })
}

pub fn parse_permissions(xml: &str) -> Result<PermissionsDocument, PermissionsFormatError> {
    let doc = Document::parse(xml).map_err(|e| PermissionsFormatError::Malformed {
        line: e.pos().row,
        col: e.pos().col,
        message: e.to_string(),
    })?;
    let root = doc.root_element();
    only(root, "permissions")?;
    let grants = elements(root).map(grant).collect::<Result<Vec<_>, _>>()?;
    Ok(PermissionsDocument::new(grants, root.attribute("source_digest").unwrap_or(""))?)
}
