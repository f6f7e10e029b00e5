//! Export signatures: the interface of an article.
//!
//! An article's interface is what its dependents can observe — the values its
//! definitions bind and the statements its theorems assert. Justifications
//! are implementation: editing one changes the source hash but not the
//! signature, which is exactly what lets dependents be cut off from
//! re-verification. The canonical serialization doubles as the on-disk
//! format (`state/exports/<name>.sig`) and as the bytes the signature hash
//! is computed over.

use crate::hash::ContentHash;
use crate::lang::ArticleName;
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExportPayload {
    Definition { symbol: String, value: i64 },
    Theorem { statement: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExportEntry {
    pub label: String,
    pub payload: ExportPayload,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExportSignature {
    pub article: ArticleName,
    /// Entries sorted by label (labels are unique within an article).
    pub entries: Vec<ExportEntry>,
    pub sig_hash: ContentHash,
}

impl ExportSignature {
    /// Build a signature from (unsorted) entries; computes the hash over the
    /// canonical serialization so it is independent of input order.
    pub fn new(article: ArticleName, mut entries: Vec<ExportEntry>) -> Self {
        entries.sort_by(|a, b| a.label.cmp(&b.label));
        let mut sig = ExportSignature {
            article,
            entries,
            sig_hash: ContentHash::of(b""),
        };
        sig.sig_hash = ContentHash::of(sig.canonical_text().as_bytes());
        sig
    }

    /// Canonical serialization, LF lines:
    ///
    /// ```text
    /// export <article>
    /// def <label> <symbol> <value>
    /// thm <label> <canonical statement>
    /// ```
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "export {}", self.article);
        for entry in &self.entries {
            match &entry.payload {
                ExportPayload::Definition { symbol, value } => {
                    let _ = writeln!(out, "def {} {} {}", entry.label, symbol, value);
                }
                ExportPayload::Theorem { statement } => {
                    let _ = writeln!(out, "thm {} {}", entry.label, statement);
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Option<Self> {
        let mut lines = text.lines();
        let article = ArticleName::new(lines.next()?.strip_prefix("export ")?).ok()?;
        let mut entries = Vec::new();
        for line in lines {
            if let Some(rest) = line.strip_prefix("def ") {
                let mut parts = rest.splitn(3, ' ');
                let label = parts.next()?.to_owned();
                let symbol = parts.next()?.to_owned();
                let value: i64 = parts.next()?.parse().ok()?;
                entries.push(ExportEntry {
                    label,
                    payload: ExportPayload::Definition { symbol, value },
                });
            } else if let Some(rest) = line.strip_prefix("thm ") {
                let (label, statement) = rest.split_once(' ')?;
                entries.push(ExportEntry {
                    label: label.to_owned(),
                    payload: ExportPayload::Theorem { statement: statement.to_owned() },
                });
            } else {
                return None;
            }
        }
        Some(ExportSignature::new(article, entries))
    }

    pub fn contains_label(&self, label: &str) -> bool {
        self.entries.binary_search_by(|e| e.label.as_str().cmp(label)).is_ok()
    }

    /// The value an imported symbol binds, if this article defines it.
    /// When several definitions could bind the same symbol the first by
    /// label order wins, but the parser already forbids that within one
    /// article.
    pub fn symbol_value(&self, symbol: &str) -> Option<i64> {
        self.entries.iter().find_map(|e| match &e.payload {
            ExportPayload::Definition { symbol: s, value } if s == symbol => Some(*value),
            _ => None,
        })
    }

    /// The label of the definition binding `symbol`, for link rendering.
    pub fn symbol_label(&self, symbol: &str) -> Option<&str> {
        self.entries.iter().find_map(|e| match &e.payload {
            ExportPayload::Definition { symbol: s, .. } if s == symbol => {
                Some(e.label.as_str())
            }
            _ => None,
        })
    }

    /// File name under `state/exports/`.
    pub fn file_name(article: &ArticleName) -> String {
        format!("{article}.sig")
    }

    /// Whether `new` extends `old` by appended theorems only: every old
    /// entry survives unchanged and nothing added binds a symbol.
    ///
    /// This is the append-safety rule. A dependent resolves symbols and
    /// references against its imports' entries; an export that merely gained
    /// theorems cannot change any resolution the dependent already made —
    /// values are untouched and labels only appear, never move. A new
    /// *definition* can capture a symbol that previously resolved through a
    /// later import, so definition growth does not qualify.
    pub fn is_theorem_only_extension(old: &ExportSignature, new: &ExportSignature) -> bool {
        let new_by_label: std::collections::BTreeMap<&str, &ExportPayload> =
            new.entries.iter().map(|e| (e.label.as_str(), &e.payload)).collect();
        for entry in &old.entries {
            if new_by_label.get(entry.label.as_str()) != Some(&&entry.payload) {
                return false;
            }
        }
        let old_labels: std::collections::BTreeSet<&str> =
            old.entries.iter().map(|e| e.label.as_str()).collect();
        new.entries
            .iter()
            .filter(|e| !old_labels.contains(e.label.as_str()))
            .all(|e| matches!(e.payload, ExportPayload::Theorem { .. }))
    }
}
