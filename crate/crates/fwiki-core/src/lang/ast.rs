//! Syntax tree for the article language.
//!
//! Equality on expressions, references and items deliberately ignores source
//! spans: two parses of the same text compare equal even though the spans
//! differ, which is what round-trip tests and signature computation want.
//! Spans exist purely to give diagnostics a location.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// A validated article name: `[a-z][a-z0-9_]{0,63}`, also the base name of
/// the `<name>.fml` source file.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ArticleName(String);

impl ArticleName {
    pub fn new(name: &str) -> Result<Self, InvalidName> {
        if Self::is_valid(name) {
            Ok(ArticleName(name.to_owned()))
        } else {
            Err(InvalidName(name.to_owned()))
        }
    }

    pub fn is_valid(name: &str) -> bool {
        let bytes = name.as_bytes();
        if bytes.is_empty() || bytes.len() > 64 {
            return false;
        }
        bytes[0].is_ascii_lowercase()
            && bytes[1..]
                .iter()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || *b == b'_')
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The source file name for this article.
    pub fn file_name(&self) -> String {
        format!("{}.fml", self.0)
    }

    /// Inverse of [`ArticleName::file_name`]: accepts only a bare
    /// `<name>.fml` with a valid name.
    pub fn from_file_name(file: &str) -> Option<Self> {
        let stem = file.strip_suffix(".fml")?;
        ArticleName::new(stem).ok()
    }
}

impl fmt::Display for ArticleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ArticleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ArticleName({})", self.0)
    }
}

impl FromStr for ArticleName {
    type Err = InvalidName;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ArticleName::new(s)
    }
}

impl<'de> Deserialize<'de> for ArticleName {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ArticleName::new(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("invalid article name `{0}`: must match [a-z][a-z0-9_]{{0,63}}")]
pub struct InvalidName(pub String);

/// A 1-based source position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub column: u32,
}

impl Span {
    pub const fn new(line: u32, column: u32) -> Self {
        Span { line, column }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// The declared environment: the ordered import list.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EnvironDecl {
    pub imports: Vec<ArticleName>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Eq,
    Lt,
    Le,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Lt => "<",
            Rel::Le => "<=",
        }
    }

    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Rel::Eq => lhs == rhs,
            Rel::Lt => lhs < rhs,
            Rel::Le => lhs <= rhs,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Expr {
    Int {
        value: i64,
        span: Span,
    },
    Ident {
        name: String,
        span: Span,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        span: Span,
    },
    /// An explicitly parenthesized subtree, kept so the canonical formatter
    /// reproduces the source shape.
    Paren {
        inner: Box<Expr>,
        span: Span,
    },
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Int { span, .. }
            | Expr::Ident { span, .. }
            | Expr::Binary { span, .. }
            | Expr::Paren { span, .. } => *span,
        }
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Expr::Int { value: a, .. }, Expr::Int { value: b, .. }) => a == b,
            (Expr::Ident { name: a, .. }, Expr::Ident { name: b, .. }) => a == b,
            (
                Expr::Binary { op: ao, lhs: al, rhs: ar, .. },
                Expr::Binary { op: bo, lhs: bl, rhs: br, .. },
            ) => ao == bo && al == bl && ar == br,
            (Expr::Paren { inner: a, .. }, Expr::Paren { inner: b, .. }) => a == b,
            _ => false,
        }
    }
}

impl Eq for Expr {}

/// A justification reference: `label` for a local item, `article:label` for
/// an imported one.
#[derive(Clone, Debug)]
pub struct Ref {
    pub article: Option<ArticleName>,
    pub label: String,
    pub span: Span,
}

impl PartialEq for Ref {
    fn eq(&self, other: &Self) -> bool {
        self.article == other.article && self.label == other.label
    }
}

impl Eq for Ref {}

impl fmt::Display for Ref {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.article {
            Some(a) => write!(f, "{}:{}", a, self.label),
            None => f.write_str(&self.label),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Justification {
    Evaluation,
    Refs(Vec<Ref>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ItemKind {
    Definition {
        symbol: String,
        body: Expr,
    },
    Theorem {
        lhs: Expr,
        rel: Rel,
        rhs: Expr,
        justification: Justification,
    },
}

/// One article item: a labelled definition or theorem.
#[derive(Clone, Debug)]
pub struct Item {
    pub label: String,
    pub kind: ItemKind,
    pub span: Span,
}

impl PartialEq for Item {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.kind == other.kind
    }
}

impl Eq for Item {}

/// A parsed article: header plus items in source order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Article {
    pub name: ArticleName,
    pub environ: EnvironDecl,
    pub items: Vec<Item>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn name_grammar() {
        assert!(ArticleName::is_valid("a"));
        assert!(ArticleName::is_valid("abc_01"));
        assert!(ArticleName::is_valid(&"a".repeat(64)));
        assert!(!ArticleName::is_valid(""));
        assert!(!ArticleName::is_valid("Abc"));
        assert!(!ArticleName::is_valid("1abc"));
        assert!(!ArticleName::is_valid("_abc"));
        assert!(!ArticleName::is_valid(&"a".repeat(65)));
        assert!(!ArticleName::is_valid("a b"));
    }

    #[test]
    fn file_name_round_trip() {
        let n = ArticleName::new("fib_01").unwrap();
        assert_eq!(n.file_name(), "fib_01.fml");
        assert_eq!(ArticleName::from_file_name("fib_01.fml").unwrap(), n);
        assert!(ArticleName::from_file_name("fib_01.txt").is_none());
        assert!(ArticleName::from_file_name("Fib.fml").is_none());
    }

    #[test]
    fn expr_equality_ignores_spans() {
        let a = Expr::Int { value: 3, span: Span::new(1, 1) };
        let b = Expr::Int { value: 3, span: Span::new(9, 9) };
        assert_eq!(a, b);
    }
}
