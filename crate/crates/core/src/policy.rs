//! The hierarchical MAC profile model: profiles bound to subjects, rules bound to
//! objects, nested child profiles and imports.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{ImportError, LoadFailure, PolicyError};
use crate::glob::AttachmentExpression;

/// The only policy dialect version this crate understands.
pub const POLICY_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Qualifier {
    Allow,
    Deny,
}

impl Qualifier {
    pub fn as_str(self) -> &'static str {
        match self {
            Qualifier::Allow => "ALLOW",
            Qualifier::Deny => "DENY",
        }
    }
}

impl fmt::Display for Qualifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Qualifier {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ALLOW" => Ok(Qualifier::Allow),
            "DENY" => Ok(Qualifier::Deny),
            other => Err(unknown("qualifier", other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObjectKind {
    Topic,
    Service,
    Parameter,
    Action,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 4] = [
        ObjectKind::Topic,
        ObjectKind::Service,
        ObjectKind::Parameter,
        ObjectKind::Action,
    ];

    /// Verbs that are legal on this kind of object, in canonical order.
    pub fn verbs(self) -> &'static [Verb] {
        match self {
            ObjectKind::Topic => &[Verb::Publish, Verb::Subscribe, Verb::Relay],
            ObjectKind::Service => &[Verb::Call, Verb::Reply],
            ObjectKind::Parameter => &[Verb::Read, Verb::Write],
            ObjectKind::Action => &[Verb::Call, Verb::Cancel, Verb::Feedback],
        }
    }

    pub fn allows(self, verb: Verb) -> bool {
        self.verbs().contains(&verb)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectKind::Topic => "topic",
            ObjectKind::Service => "service",
            ObjectKind::Parameter => "parameter",
            ObjectKind::Action => "action",
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ObjectKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| unknown("object kind", s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verb {
    Publish,
    Subscribe,
    Relay,
    Call,
    Reply,
    Read,
    Write,
    Feedback,
    Cancel,
}

impl Verb {
    pub const ALL: [Verb; 9] = [
        Verb::Publish,
        Verb::Subscribe,
        Verb::Relay,
        Verb::Call,
        Verb::Reply,
        Verb::Read,
        Verb::Write,
        Verb::Feedback,
        Verb::Cancel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verb::Publish => "publish",
            Verb::Subscribe => "subscribe",
            Verb::Relay => "relay",
            Verb::Call => "call",
            Verb::Reply => "reply",
            Verb::Read => "read",
            Verb::Write => "write",
            Verb::Feedback => "feedback",
            Verb::Cancel => "cancel",
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verb {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Verb::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| unknown("verb", s))
    }
}

fn unknown(what: &'static str, value: &str) -> PolicyError {
    PolicyError::UnknownToken {
        what,
        value: value.to_string(),
    }
}

/// An ALLOW or DENY over a set of verbs on the objects its attachments select.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PolicyRule {
    pub qualifier: Qualifier,
    pub kind: ObjectKind,
    pub verbs: BTreeSet<Verb>,
    pub objects: Vec<AttachmentExpression>,
}

impl PolicyRule {
    pub fn new(
        qualifier: Qualifier,
        kind: ObjectKind,
        verbs: impl IntoIterator<Item = Verb>,
        objects: Vec<AttachmentExpression>,
    ) -> Result<Self, PolicyError> {
        let rule = Self {
            qualifier,
            kind,
            verbs: verbs.into_iter().collect(),
            objects,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.verbs.is_empty() {
            return Err(PolicyError::EmptyVerbs);
        }
        if let Some(&verb) = self.verbs.iter().find(|v| !self.kind.allows(**v)) {
            return Err(PolicyError::IllegalVerb {
                kind: self.kind,
                verb,
            });
        }
        if self.objects.is_empty() {
            return Err(PolicyError::EmptyObjects);
        }
        Ok(())
    }
}

/// A named scope bound to subjects, holding rules, child profiles and imports.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolicyProfile {
    pub name: String,
    pub attachments: Vec<AttachmentExpression>,
    pub rules: Vec<PolicyRule>,
    pub children: Vec<PolicyProfile>,
    pub imports: Vec<String>,
}

impl PolicyProfile {
    pub fn new(name: impl Into<String>, attachments: Vec<AttachmentExpression>) -> Self {
        Self {
            name: name.into(),
            attachments,
            ..Self::default()
        }
    }

    pub fn with_rule(mut self, rule: PolicyRule) -> Self {
        self.rules.push(rule);
        self
    }

    pub fn with_child(mut self, child: PolicyProfile) -> Self {
        self.children.push(child);
        self
    }

    fn validate(&self) -> Result<(), PolicyError> {
        if self.name.is_empty() {
            return Err(PolicyError::EmptyProfileName);
        }
        if self.attachments.is_empty() {
            return Err(PolicyError::EmptyAttachments(self.name.clone()));
        }
        if let Some(rel) = self.attachments.iter().find(|a| a.is_relative()) {
            return Err(PolicyError::RelativeSubject(rel.pattern().to_string()));
        }
        self.rules.iter().try_for_each(PolicyRule::validate)?;
        validate_siblings(&self.children)
    }

    fn has_imports(&self) -> bool {
        !self.imports.is_empty() || self.children.iter().any(PolicyProfile::has_imports)
    }

    fn rule_count(&self) -> usize {
        self.rules.len() + self.children.iter().map(PolicyProfile::rule_count).sum::<usize>()
    }
}

fn validate_siblings(profiles: &[PolicyProfile]) -> Result<(), PolicyError> {
    let mut seen = BTreeSet::new();
    for p in profiles {
        if !seen.insert(p.name.as_str()) {
            return Err(PolicyError::DuplicateProfile(p.name.clone()));
        }
        p.validate()?;
    }
    Ok(())
}

/// A parsed policy document.
///
/// Top-level `rules` are not bound to any subject; they only take effect when
/// the document is imported into a profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyTree {
    pub version: String,
    pub rules: Vec<PolicyRule>,
    pub profiles: Vec<PolicyProfile>,
    pub imports: Vec<String>,
    pub source_path: String,
}

impl PolicyTree {
    pub fn new(source_path: impl Into<String>) -> Self {
        Self {
            version: String::from(POLICY_VERSION),
            rules: Vec::new(),
            profiles: Vec::new(),
            imports: Vec::new(),
            source_path: source_path.into(),
        }
    }

    pub fn with_profile(mut self, profile: PolicyProfile) -> Self {
        self.profiles.push(profile);
        self
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.version != POLICY_VERSION {
            return Err(PolicyError::UnsupportedVersion(self.version.clone()));
        }
        self.rules.iter().try_for_each(PolicyRule::validate)?;
        validate_siblings(&self.profiles)
    }

    pub fn has_imports(&self) -> bool {
        !self.imports.is_empty() || self.profiles.iter().any(PolicyProfile::has_imports)
    }

    /// Total number of rules, including unbound top-level rules.
    pub fn rule_count(&self) -> usize {
        self.rules.len() + self.profiles.iter().map(PolicyProfile::rule_count).sum::<usize>()
    }

    /// Visits every profile depth-first (pre-order) with its path.
    pub fn walk<'a>(&'a self, mut visit: impl FnMut(&ProfilePath, &'a PolicyProfile)) {
        fn go<'a>(
            path: &mut ProfilePath,
            profile: &'a PolicyProfile,
            visit: &mut dyn FnMut(&ProfilePath, &'a PolicyProfile),
        ) {
            path.0.push(profile.name.clone());
            visit(path, profile);
            for child in &profile.children {
                go(path, child, visit);
            }
            path.0.pop();
        }
        let mut path = ProfilePath::default();
        for p in &self.profiles {
            go(&mut path, p, &mut visit);
        }
    }
}

/// Names from a root profile down to a nested profile.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ProfilePath(pub Vec<String>);

impl fmt::Display for ProfilePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("/"))
    }
}

/// Identifies a rule by the profile holding it and its index there.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId {
    pub profile: ProfilePath,
    pub index: usize,
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.profile, self.index)
    }
}

/// Expands every import by splicing the loaded document into the import site:
/// its top-level rules join the importing scope's rules and its profiles join the
/// scope's children.
///
/// `load(from, path)` receives the `source_path` of the importing document and
/// the import path as written, and returns the parsed document. Loaded trees are
/// identified by their `source_path` for cycle detection.
pub fn resolve_imports<L>(tree: PolicyTree, mut load: L) -> Result<PolicyTree, ImportError>
where
    L: FnMut(&str, &str) -> Result<PolicyTree, LoadFailure>,
{
    let mut chain = alloc::vec![tree.source_path.clone()];
    let resolved = resolve_tree(tree, &mut load, &mut chain)?;
    resolved.validate()?;
    Ok(resolved)
}

type Loader<'a> = dyn FnMut(&str, &str) -> Result<PolicyTree, LoadFailure> + 'a;

fn resolve_tree(
    mut tree: PolicyTree,
    load: &mut Loader<'_>,
    chain: &mut Vec<String>,
) -> Result<PolicyTree, ImportError> {
    let source = tree.source_path.clone();
    let imports = core::mem::take(&mut tree.imports);
    let mut profiles = Vec::with_capacity(tree.profiles.len());
    for p in core::mem::take(&mut tree.profiles) {
        profiles.push(resolve_profile(p, &source, load, chain)?);
    }
    tree.profiles = profiles;
    splice(&mut tree.rules, &mut tree.profiles, &imports, &source, load, chain)?;
    Ok(tree)
}

fn resolve_profile(
    mut profile: PolicyProfile,
    source: &str,
    load: &mut Loader<'_>,
    chain: &mut Vec<String>,
) -> Result<PolicyProfile, ImportError> {
    let imports = core::mem::take(&mut profile.imports);
    let mut children = Vec::with_capacity(profile.children.len());
    for c in core::mem::take(&mut profile.children) {
        children.push(resolve_profile(c, source, load, chain)?);
    }
    profile.children = children;
    splice(&mut profile.rules, &mut profile.children, &imports, source, load, chain)?;
    Ok(profile)
}

fn splice(
    rules: &mut Vec<PolicyRule>,
    children: &mut Vec<PolicyProfile>,
    imports: &[String],
    source: &str,
    load: &mut Loader<'_>,
    chain: &mut Vec<String>,
) -> Result<(), ImportError> {
    for import in imports {
        let loaded = load(source, import).map_err(|e| match e {
            LoadFailure::NotFound => ImportError::ImportNotFound {
                path: import.clone(),
                from: source.to_string(),
            },
            LoadFailure::Invalid(message) => ImportError::Nested {
                path: import.clone(),
                message,
            },
        })?;
        if chain.contains(&loaded.source_path) {
            let mut cycle = chain.clone();
            cycle.push(loaded.source_path);
            return Err(ImportError::ImportCycle { chain: cycle });
        }
        chain.push(loaded.source_path.clone());
        let expanded = resolve_tree(loaded, load, chain)?;
        chain.pop();
        rules.extend(expanded.rules);
        children.extend(expanded.profiles);
    }
    Ok(())
}
