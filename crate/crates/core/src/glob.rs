//! Glob matching for attachment expressions and DDS criteria.
//!
//! The dialect is fnmatch-like and separator aware:
//!
//! * `*`  any run of characters other than `/` (possibly empty)
//! * `**` any run of characters including `/` (possibly empty)
//! * `?`  exactly one character other than `/`
//! * `[...]` one character (never `/`) from a set; `[!...]` or `[^...]` negates,
//!   `a-z` ranges are supported and a leading `]` is literal.
//!
//! A `[` without a closing `]` is an ordinary character, so matching is total
//! over every pattern string.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::AttachmentError;

pub(crate) const SEPARATOR: char = '/';

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Token {
    Literal(char),
    Star,
    DoubleStar,
    Any,
    Set { negated: bool, items: Vec<(char, char)> },
}

impl Token {
    fn matches_char(&self, c: char) -> bool {
        match self {
            Token::Literal(l) => *l == c,
            Token::Any => c != SEPARATOR,
            Token::Set { negated, items } => {
                if c == SEPARATOR {
                    return false;
                }
                let hit = items.iter().any(|&(lo, hi)| lo <= c && c <= hi);
                hit != *negated
            }
            Token::Star | Token::DoubleStar => false,
        }
    }
}

/// Splits a pattern into tokens, keeping the source text of each token.
pub(crate) fn tokenize(pattern: &str) -> Vec<(Token, &str)> {
    let chars: Vec<(usize, char)> = pattern.char_indices().collect();
    let end_of = |i: usize| chars.get(i).map_or(pattern.len(), |&(b, _)| b);
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        match c {
            '*' => {
                if chars.get(i + 1).map(|&(_, n)| n) == Some('*') {
                    out.push((Token::DoubleStar, &pattern[start..end_of(i + 2)]));
                    i += 2;
                } else {
                    out.push((Token::Star, &pattern[start..end_of(i + 1)]));
                    i += 1;
                }
            }
            '?' => {
                out.push((Token::Any, &pattern[start..end_of(i + 1)]));
                i += 1;
            }
            '[' => match parse_set(&chars, i) {
                Some((token, next)) => {
                    out.push((token, &pattern[start..end_of(next)]));
                    i = next;
                }
                None => {
                    out.push((Token::Literal('['), &pattern[start..end_of(i + 1)]));
                    i += 1;
                }
            },
            other => {
                out.push((Token::Literal(other), &pattern[start..end_of(i + 1)]));
                i += 1;
            }
        }
    }
    out
}

/// Parses `[...]` starting at `open`; returns the token and the index after `]`.
fn parse_set(chars: &[(usize, char)], open: usize) -> Option<(Token, usize)> {
    let mut i = open + 1;
    let mut negated = false;
    if let Some(&(_, c)) = chars.get(i) {
        if c == '!' || c == '^' {
            negated = true;
            i += 1;
        }
    }
    let first = i;
    let mut items = Vec::new();
    while i < chars.len() {
        let c = chars[i].1;
        if c == ']' && i > first {
            return Some((Token::Set { negated, items }, i + 1));
        }
        let is_range = chars.get(i + 1).map(|&(_, n)| n) == Some('-')
            && chars.get(i + 2).is_some_and(|&(_, n)| n != ']');
        if is_range {
            let hi = chars[i + 2].1;
            items.push((c, hi));
            i += 3;
        } else {
            items.push((c, c));
            i += 1;
        }
    }
    None
}

fn matches_tokens(tokens: &[Token], candidate: &[char]) -> bool {
    // reachable[j]: tokens[..t] can consume exactly candidate[..j]
    let n = candidate.len();
    let mut reachable = alloc::vec![false; n + 1];
    reachable[0] = true;
    for token in tokens {
        let mut next = alloc::vec![false; n + 1];
        match token {
            Token::Star | Token::DoubleStar => {
                let crosses = matches!(token, Token::DoubleStar);
                let mut open = false;
                for j in 0..=n {
                    if reachable[j] {
                        open = true;
                    }
                    next[j] = open;
                    if j < n && !crosses && candidate[j] == SEPARATOR {
                        open = false;
                    }
                }
            }
            single => {
                for j in 0..n {
                    if reachable[j] && single.matches_char(candidate[j]) {
                        next[j + 1] = true;
                    }
                }
            }
        }
        reachable = next;
    }
    reachable[n]
}

/// Matches `candidate` against a glob `pattern`. Total: never fails.
pub fn glob_match(pattern: &str, candidate: &str) -> bool {
    if !has_metachar(pattern) {
        return pattern == candidate;
    }
    let tokens: Vec<Token> = tokenize(pattern).into_iter().map(|(t, _)| t).collect();
    let chars: Vec<char> = candidate.chars().collect();
    matches_tokens(&tokens, &chars)
}

/// True if the string contains any glob metacharacter.
pub fn has_metachar(s: &str) -> bool {
    s.contains(['*', '?', '['])
}

/// A pattern matching exactly `literal`: each metacharacter becomes a one-item set.
pub fn escape_literal(literal: &str) -> String {
    let mut out = String::with_capacity(literal.len());
    for c in literal.chars() {
        if matches!(c, '*' | '?' | '[') {
            out.push('[');
            out.push(c);
            out.push(']');
        } else {
            out.push(c);
        }
    }
    out
}

/// Splits a rooted pattern into `(last-segment pattern, namespace pattern)` pairs.
///
/// For every candidate `c` containing at least one `/`, with `c = ns + "/" + last`
/// split at its final separator, `glob_match(pattern, c)` holds exactly when some
/// pair satisfies `glob_match(last_pat, last) && glob_match(ns_pat, ns)`.
/// The namespace pattern is empty when the pattern's final separator is its first
/// character.
pub fn split_last_segment(pattern: &str) -> Vec<(String, String)> {
    let tokens = tokenize(pattern);
    let Some(sep) = tokens
        .iter()
        .rposition(|(t, _)| *t == Token::Literal(SEPARATOR))
    else {
        // no separator: nothing with a separator can match
        return Vec::new();
    };
    let render_segment = |toks: &[(Token, &str)]| -> String {
        toks.iter()
            .map(|(t, src)| if *t == Token::DoubleStar { "*" } else { *src })
            .collect()
    };
    let source = |toks: &[(Token, &str)]| -> String { toks.iter().map(|(_, s)| *s).collect() };

    let mut pairs = alloc::vec![(render_segment(&tokens[sep + 1..]), source(&tokens[..sep]))];
    for k in sep + 1..tokens.len() {
        if tokens[k].0 == Token::DoubleStar {
            let mut last = String::from("*");
            last.push_str(&render_segment(&tokens[k + 1..]));
            let mut ns = source(&tokens[..k]);
            ns.push_str("**");
            pairs.push((last, ns));
        }
    }
    pairs.sort();
    pairs.dedup();
    pairs
}

/// Whether an attachment is compared literally or as a glob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttachmentKind {
    Exact,
    Glob,
}

/// A subject or object binding: a rooted URI path, exact or glob.
///
/// Patterns start with `/`, or with `~` meaning "relative to the requesting node".
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttachmentExpression {
    pattern: String,
    kind: AttachmentKind,
}

impl AttachmentExpression {
    pub fn new(pattern: impl Into<String>, kind: AttachmentKind) -> Result<Self, AttachmentError> {
        let pattern = pattern.into();
        if pattern.is_empty() {
            return Err(AttachmentError::Empty);
        }
        let rooted = pattern.starts_with('/')
            || pattern == "~"
            || pattern.starts_with("~/");
        if !rooted {
            return Err(AttachmentError::NotRooted(pattern));
        }
        Ok(Self { pattern, kind })
    }

    /// Exact attachment for a literal name.
    pub fn exact(name: impl Into<String>) -> Result<Self, AttachmentError> {
        Self::new(name, AttachmentKind::Exact)
    }

    pub fn glob(pattern: impl Into<String>) -> Result<Self, AttachmentError> {
        Self::new(pattern, AttachmentKind::Glob)
    }

    /// Parses the attribute form: a `glob:` prefix forces glob kind, otherwise the
    /// value is a glob iff it contains a metacharacter.
    pub fn parse(value: &str) -> Result<Self, AttachmentError> {
        if let Some(rest) = value.strip_prefix("glob:") {
            Self::glob(rest)
        } else if has_metachar(value) {
            Self::glob(value)
        } else {
            Self::exact(value)
        }
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    pub fn kind(&self) -> AttachmentKind {
        self.kind
    }

    pub fn is_relative(&self) -> bool {
        self.pattern.starts_with('~')
    }

    /// The pattern in glob syntax: exact names are escaped.
    pub fn as_glob(&self) -> String {
        match self.kind {
            AttachmentKind::Exact => escape_literal(&self.pattern),
            AttachmentKind::Glob => self.pattern.clone(),
        }
    }

    /// Resolves a `~` prefix against `subject`.
    pub fn expanded(&self, subject: &str) -> Self {
        Self {
            pattern: expand_relative(&self.pattern, subject),
            kind: self.kind,
        }
    }

    pub fn matches(&self, candidate: &str) -> bool {
        match self.kind {
            AttachmentKind::Exact => self.pattern == candidate,
            AttachmentKind::Glob => glob_match(&self.pattern, candidate),
        }
    }
}

impl fmt::Display for AttachmentExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kind == AttachmentKind::Glob && !has_metachar(&self.pattern) {
            f.write_str("glob:")?;
        }
        f.write_str(&self.pattern)
    }
}

/// Expands `~` and `~/x` against an absolute subject URI; other names pass through.
pub fn expand_relative(name: &str, subject: &str) -> String {
    let base = subject.trim_end_matches(SEPARATOR);
    if name == "~" {
        if base.is_empty() {
            return String::from("/");
        }
        return String::from(base);
    }
    match name.strip_prefix("~/") {
        Some(rest) => {
            let mut out = String::from(base);
            out.push(SEPARATOR);
            out.push_str(rest);
            out
        }
        None => String::from(name),
    }
}

/// Exact attachments compare literally, glob attachments use [`glob_match`].
pub fn match_attachment(expr: &AttachmentExpression, candidate: &str) -> bool {
    expr.matches(candidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn escaped_literal_matches_only_itself() {
        for lit in ["/a*b", "/x?[y]", "/[", "/plain"] {
            let p = escape_literal(lit);
            assert!(glob_match(&p, lit), "{p}");
        }
        assert!(!glob_match(&escape_literal("/a*"), "/ab"));
        assert!(!glob_match(&escape_literal("/a?"), "/ab"));
    }

    #[test]
    fn exact_identity() {
        let e = AttachmentExpression::exact("/chatter").unwrap();
        assert!(e.matches("/chatter"));
        assert!(!e.matches("/chatter2"));
    }

    #[test]
    fn single_segment_star() {
        let e = AttachmentExpression::parse("/foo/*").unwrap();
        assert_eq!(e.kind(), AttachmentKind::Glob);
        assert!(e.matches("/foo/bar"));
        assert!(!e.matches("/foo/bar/baz"));
        assert!(e.matches("/foo/"));
    }

    #[test]
    fn universal_double_star() {
        let e = AttachmentExpression::parse("/**").unwrap();
        assert!(e.matches("/a/b/c"));
        assert!(e.matches("/"));
        assert!(!e.matches("a"));
    }

    #[test]
    fn question_and_sets() {
        assert!(glob_match("/a?c", "/abc"));
        assert!(!glob_match("/a?c", "/a/c"));
        assert!(glob_match("/[ab]x", "/bx"));
        assert!(!glob_match("/[!ab]x", "/bx"));
        assert!(glob_match("/[^ab]x", "/cx"));
        assert!(glob_match("/[a-c]", "/b"));
        assert!(!glob_match("/[a-c]", "/d"));
        assert!(glob_match("/[]]", "/]"));
        assert!(!glob_match("/[/]", "//"));
    }

    #[test]
    fn unclosed_bracket_is_literal() {
        assert!(glob_match("/a[b", "/a[b"));
        assert!(!glob_match("/a[b", "/ab"));
    }

    #[test]
    fn attachment_validation() {
        assert_eq!(AttachmentExpression::parse(""), Err(AttachmentError::Empty));
        assert!(matches!(
            AttachmentExpression::parse("talker"),
            Err(AttachmentError::NotRooted(_))
        ));
        assert!(AttachmentExpression::parse("~/x").is_ok());
        assert!(AttachmentExpression::parse("~x").is_err());
    }

    #[test]
    fn glob_prefix_round_trips() {
        let e = AttachmentExpression::parse("glob:/plain").unwrap();
        assert_eq!(e.kind(), AttachmentKind::Glob);
        assert_eq!(alloc::format!("{e}"), "glob:/plain");
        assert_eq!(AttachmentExpression::parse(&alloc::format!("{e}")).unwrap(), e);
    }

    #[test]
    fn relative_expansion() {
        assert_eq!(expand_relative("~/x", "/s"), "/s/x");
        assert_eq!(expand_relative("~", "/s"), "/s");
        assert_eq!(expand_relative("~/x", "/"), "/x");
        assert_eq!(expand_relative("/abs", "/s"), "/abs");
    }

    #[test]
    fn split_simple() {
        assert_eq!(
            split_last_segment("/foo/bar"),
            vec![(String::from("bar"), String::from("/foo"))]
        );
        assert_eq!(
            split_last_segment("/chatter"),
            vec![(String::from("chatter"), String::new())]
        );
        assert_eq!(
            split_last_segment("/**"),
            vec![
                (String::from("*"), String::new()),
                (String::from("*"), String::from("/**")),
            ]
        );
    }
}
