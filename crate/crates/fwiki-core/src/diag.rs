//! Diagnostics. Verification failures are data, not exceptions: every failed
//! check produces at least one diagnostic with a source location, and gate
//! verdicts carry the full list.

use crate::lang::{ArticleName, Span};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    // verification failures
    UnboundSymbol,
    UnresolvedRef,
    UndeclaredImportRef,
    ForwardRef,
    FalseStatement,
    DefCycle,
    Overflow,
    DuplicateLabel,
    // gate-level failures
    Parse,
    Cycle,
    DanglingImport,
    IllegalPath,
    RequestInvalid,
    Infrastructure,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagnostic {
    pub article: Option<ArticleName>,
    pub span: Option<Span>,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl Diagnostic {
    pub fn new(
        article: &ArticleName,
        span: Span,
        kind: DiagnosticKind,
        message: impl Into<String>,
    ) -> Self {
        Diagnostic {
            article: Some(article.clone()),
            span: Some(span),
            kind,
            message: message.into(),
        }
    }

    /// A diagnostic with no source location, for failures that precede or
    /// sit outside any article (graph errors, request problems, IO).
    pub fn global(kind: DiagnosticKind, message: impl Into<String>) -> Self {
        Diagnostic { article: None, span: None, kind, message: message.into() }
    }

    pub fn for_article(
        article: &ArticleName,
        kind: DiagnosticKind,
        message: impl Into<String>,
    ) -> Self {
        Diagnostic { article: Some(article.clone()), span: None, kind, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.article, &self.span) {
            (Some(a), Some(s)) => write!(f, "{a}:{s}: {:?}: {}", self.kind, self.message),
            (Some(a), None) => write!(f, "{a}: {:?}: {}", self.kind, self.message),
            _ => write!(f, "{:?}: {}", self.kind, self.message),
        }
    }
}
