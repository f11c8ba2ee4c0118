//! The policy file format.
//!
//! ```xml
//! <policy version="1">
//!   <profile name="talker" attach="/talker">
//!     <import path="common.xml"/>
//!     <topics qualifier="ALLOW" verbs="publish subscribe">
//!       <topic>/chatter</topic>
//!     </topics>
//!     <profile name="child" attach="/talker"> ... </profile>
//!   </profile>
//! </policy>
//! ```
//!
//! Rule blocks and imports may also appear directly under `<policy>`; such rules
//! bind to nothing until the document is imported into a profile.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use armory_core::error::{ImportError, LoadFailure, PolicyError};
use armory_core::policy::{resolve_imports, POLICY_VERSION};
use armory_core::{AttachmentExpression, ObjectKind, PolicyProfile, PolicyRule, PolicyTree, Qualifier, Verb};
use roxmltree::{Document, Node};
use thiserror::Error;

use crate::xml::{elements, escape, has_stray_text, position, text};

#[derive(Debug, Error)]
pub enum PolicyFileError {
    #[error("{path}:{line}:{col}: malformed document: {message}")]
    MalformedDocument {
        path: String,
        line: u32,
        col: u32,
        message: String,
    },
    #[error("{path}:{line}:{col}: {message}")]
    SchemaViolation {
        path: String,
        line: u32,
        col: u32,
        message: String,
    },
    #[error("{path}: unsupported policy version `{version}` (expected `{POLICY_VERSION}`)")]
    UnsupportedVersion { path: String, version: String },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Import(#[from] ImportError),
}

/// Element name of a rule block and of its object children.
fn block_names(kind: ObjectKind) -> (&'static str, &'static str) {
    match kind {
        ObjectKind::Topic => ("topics", "topic"),
        ObjectKind::Service => ("services", "service"),
        ObjectKind::Parameter => ("parameters", "parameter"),
        ObjectKind::Action => ("actions", "action"),
    }
}

fn block_kind(element: &str) -> Option<ObjectKind> {
    ObjectKind::ALL.into_iter().find(|k| block_names(*k).0 == element)
}

struct Parser<'p> {
    path: &'p str,
}

impl Parser<'_> {
    fn schema(&self, node: Node<'_, '_>, message: impl Into<String>) -> PolicyFileError {
        let (line, col) = position(node);
        PolicyFileError::SchemaViolation {
            path: self.path.to_string(),
            line,
            col,
            message: message.into(),
        }
    }

    fn model(&self, node: Node<'_, '_>, e: PolicyError) -> PolicyFileError {
        self.schema(node, e.to_string())
    }

    fn attr<'a>(&self, node: Node<'a, '_>, name: &str) -> Result<&'a str, PolicyFileError> {
        node.attribute(name)
            .ok_or_else(|| self.schema(node, format!("<{}> requires attribute `{name}`", node.tag_name().name())))
    }

    fn only_attrs(&self, node: Node<'_, '_>, allowed: &[&str]) -> Result<(), PolicyFileError> {
        match node.attributes().find(|a| !allowed.contains(&a.name())) {
            Some(a) => Err(self.schema(
                node,
                format!("unexpected attribute `{}` on <{}>", a.name(), node.tag_name().name()),
            )),
            None => Ok(()),
        }
    }

    fn no_text(&self, node: Node<'_, '_>) -> Result<(), PolicyFileError> {
        if has_stray_text(node) {
            return Err(self.schema(node, format!("<{}> cannot contain text", node.tag_name().name())));
        }
        Ok(())
    }

    fn tree(&self, root: Node<'_, '_>) -> Result<PolicyTree, PolicyFileError> {
        if root.tag_name().name() != "policy" || root.tag_name().namespace().is_some() {
            return Err(self.schema(root, "root element must be <policy>"));
        }
        self.only_attrs(root, &["version"])?;
        let version = self.attr(root, "version")?;
        if version != POLICY_VERSION {
            return Err(PolicyFileError::UnsupportedVersion {
                path: self.path.to_string(),
                version: version.to_string(),
            });
        }
        self.no_text(root)?;
        let mut tree = PolicyTree::new(self.path);
        for child in elements(root) {
            match child.tag_name().name() {
                "profile" => tree.profiles.push(self.profile(child)?),
                "import" => tree.imports.push(self.import(child)?),
                name => match block_kind(name) {
                    Some(kind) => tree.rules.push(self.rule(child, kind)?),
                    None => return Err(self.schema(child, format!("unexpected element <{name}> in <policy>"))),
                },
            }
        }
        tree.validate().map_err(|e| self.model(root, e))?;
        Ok(tree)
    }

    fn import(&self, node: Node<'_, '_>) -> Result<String, PolicyFileError> {
        self.only_attrs(node, &["path"])?;
        if elements(node).next().is_some() || has_stray_text(node) {
            return Err(self.schema(node, "<import> must be empty"));
        }
        let path = self.attr(node, "path")?;
        if path.trim().is_empty() {
            return Err(self.schema(node, "import path is empty"));
        }
        Ok(path.to_string())
    }

    fn profile(&self, node: Node<'_, '_>) -> Result<PolicyProfile, PolicyFileError> {
        self.only_attrs(node, &["name", "attach"])?;
        self.no_text(node)?;
        let name = self.attr(node, "name")?;
        let attachments = self
            .attr(node, "attach")?
            .split_whitespace()
            .map(AttachmentExpression::parse)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| self.model(node, e.into()))?;
        let mut profile = PolicyProfile::new(name, attachments);
        for child in elements(node) {
            match child.tag_name().name() {
                "profile" => profile.children.push(self.profile(child)?),
                "import" => profile.imports.push(self.import(child)?),
                name => match block_kind(name) {
                    Some(kind) => profile.rules.push(self.rule(child, kind)?),
                    None => {
                        return Err(self.schema(child, format!("unexpected element <{name}> in <profile>")))
                    }
                },
            }
        }
        Ok(profile)
    }

    fn rule(&self, node: Node<'_, '_>, kind: ObjectKind) -> Result<PolicyRule, PolicyFileError> {
        self.only_attrs(node, &["qualifier", "verbs"])?;
        self.no_text(node)?;
        let qualifier: Qualifier = self
            .attr(node, "qualifier")?
            .parse()
            .map_err(|e| self.model(node, e))?;
        let verbs = self
            .attr(node, "verbs")?
            .split_whitespace()
            .map(str::parse::<Verb>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| self.model(node, e))?;
        let (_, item) = block_names(kind);
        let mut objects = Vec::new();
        for child in elements(node) {
            if child.tag_name().name() != item {
                return Err(self.schema(
                    child,
                    format!("unexpected element <{}> in <{}>", child.tag_name().name(), node.tag_name().name()),
                ));
            }
            self.only_attrs(child, &[])?;
            if elements(child).next().is_some() {
                return Err(self.schema(child, format!("<{item}> holds text only")));
            }
            let name = text(child);
            objects.push(AttachmentExpression::parse(name.trim()).map_err(|e| self.model(child, e.into()))?);
        }
        PolicyRule::new(qualifier, kind, verbs, objects).map_err(|e| self.model(node, e))
    }
}

/// Parses one document without expanding imports. `path` labels diagnostics and
/// becomes the tree's `source_path`.
pub fn parse_policy(xml: &str, path: &str) -> Result<PolicyTree, PolicyFileError> {
    let doc = Document::parse(xml).map_err(|e| {
        let pos = e.pos();
        PolicyFileError::MalformedDocument {
            path: path.to_string(),
            line: pos.row,
            col: pos.col,
            message: e.to_string(),
        }
    })?;
    Parser { path }.tree(doc.root_element())
}

fn read(path: &Path) -> Result<String, PolicyFileError> {
    fs::read_to_string(path).map_err(|source| PolicyFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn canonical(path: &Path) -> PathBuf {
    fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf())
}

/// Reads a policy file and expands its imports; import paths are relative to the
/// importing file.
pub fn load_policy(path: &Path) -> Result<PolicyTree, PolicyFileError> {
    let root = canonical(path);
    let tree = parse_policy(&read(path)?, &root.display().to_string())?;
    let resolved = resolve_imports(tree, |from, import| {
        let base = Path::new(from).parent().unwrap_or(Path::new("."));
        let target = base.join(import);
        if !target.is_file() {
            return Err(LoadFailure::NotFound);
        }
        let target = canonical(&target);
        let xml = read(&target).map_err(|e| LoadFailure::Invalid(e.to_string()))?;
        parse_policy(&xml, &target.display().to_string()).map_err(|e| LoadFailure::Invalid(e.to_string()))
    })?;
    Ok(resolved)
}

fn write_rule(out: &mut String, rule: &PolicyRule, depth: usize) {
    let pad = "  ".repeat(depth);
    let (block, item) = block_names(rule.kind);
    let verbs: Vec<&str> = rule.verbs.iter().map(|v| v.as_str()).collect();
    let _ = writeln!(
        out,
        "{pad}<{block} qualifier=\"{}\" verbs=\"{}\">",
        rule.qualifier,
        verbs.join(" ")
    );
    for o in &rule.objects {
        let _ = writeln!(out, "{pad}  <{item}>{}</{item}>", escape(&o.to_string()));
    }
    let _ = writeln!(out, "{pad}</{block}>");
}

fn write_profile(out: &mut String, profile: &PolicyProfile, depth: usize) {
    let pad = "  ".repeat(depth);
    let attach: Vec<String> = profile.attachments.iter().map(ToString::to_string).collect();
    let _ = writeln!(
        out,
        "{pad}<profile name=\"{}\" attach=\"{}\">",
        escape(&profile.name),
        escape(&attach.join(" "))
    );
    for i in &profile.imports {
        let _ = writeln!(out, "{pad}  <import path=\"{}\"/>", escape(i));
    }
    for r in &profile.rules {
        write_rule(out, r, depth + 1);
    }
    for c in &profile.children {
        write_profile(out, c, depth + 1);
    }
    let _ = writeln!(out, "{pad}</profile>");
}

/// Canonical text of a tree: two-space indent, attributes in fixed order.
pub fn write_policy(tree: &PolicyTree) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<policy version=\"{}\">", escape(&tree.version));
    for i in &tree.imports {
        let _ = writeln!(out, "  <import path=\"{}\"/>", escape(i));
    }
    for r in &tree.rules {
        write_rule(&mut out, r, 1);
    }
    for p in &tree.profiles {
        write_profile(&mut out, p, 1);
    }
    out.push_str("</policy>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TALKER: &str = r#"<policy version="1">
  <profile name="talker" attach="/talker">
    <topics qualifier="ALLOW" verbs="publish subscribe">
      <topic>/chatter</topic>
    </topics>
    <services qualifier="DENY" verbs="call">
      <service>/secret_service</service>
    </services>
  </profile>
</policy>"#;

    #[test]
    fn parses_example() {
        let t = parse_policy(TALKER, "t.xml").unwrap();
        assert_eq!(t.profiles.len(), 1);
        let p = &t.profiles[0];
        assert_eq!(p.rules.len(), 2);
        assert_eq!(p.rules[0].verbs.len(), 2);
        assert_eq!(p.rules[1].qualifier, Qualifier::Deny);
    }

    #[test]
    fn write_then_parse_is_identity() {
        let t = parse_policy(TALKER, "t.xml").unwrap();
        let again = parse_policy(&write_policy(&t), "t.xml").unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn illegal_verb_reports_position() {
        let xml = "<policy version=\"1\">\n  <profile name=\"p\" attach=\"/p\">\n    <topics qualifier=\"ALLOW\" verbs=\"call\"><topic>/x</topic></topics>\n  </profile>\n</policy>";
        match parse_policy(xml, "bad.xml") {
            Err(PolicyFileError::SchemaViolation { line, col, message, .. }) => {
                assert_eq!((line, col), (3, 5));
                assert!(message.contains("call"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn version_and_well_formedness() {
        assert!(matches!(
            parse_policy("<policy version=\"2\"/>", "v.xml"),
            Err(PolicyFileError::UnsupportedVersion { .. })
        ));
        assert!(matches!(
            parse_policy("<policy version=\"1\">", "m.xml"),
            Err(PolicyFileError::MalformedDocument { .. })
        ));
        assert!(matches!(
            parse_policy("<policy version=\"1\"><topic/></policy>", "s.xml"),
            Err(PolicyFileError::SchemaViolation { .. })
        ));
    }

    #[test]
    fn glob_prefix_survives_round_trip() {
        let xml = r#"<policy version="1"><profile name="p" attach="glob:/plain /a/*"><topics qualifier="ALLOW" verbs="publish"><topic>~/x</topic></topics></profile></policy>"#;
        let t = parse_policy(xml, "g.xml").unwrap();
        assert_eq!(parse_policy(&write_policy(&t), "g.xml").unwrap(), t);
    }
}
