//! Verification of a single article against the exports of its imports.
//!
//! An article verifies when every reference resolves (link coherence) and
//! every theorem statement evaluates true (semantic truth). Identifier
//! resolution searches the article's own earlier definitions first, then the
//! imports in declared order; first match wins, so a local definition may
//! shadow an imported symbol and the declared order breaks ties between
//! imports. Definitions bind evaluated integers and can only see earlier
//! items, and the import graph is checked acyclic before any build runs, so
//! definition expansion cannot cycle here.
//!
//! Failures are data: the record carries every diagnostic found, not just
//! the first. An expression that depends on an already-failed definition is
//! skipped silently rather than re-reported.

use crate::diag::{Diagnostic, DiagnosticKind};
use crate::hash::ContentHash;
use crate::lang::{format_statement, Article, ArticleName, BinOp, Expr, ItemKind, Justification};
use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::signature::{ExportEntry, ExportPayload, ExportSignature};
use super::state::{BuildRecord, Verdict};

/// Verify one article. `available_exports` must cover the article's declared
/// imports with verified exports; extra entries are ignored.
pub fn verify_article(
    article: &Article,
    source_hash: ContentHash,
    available_exports: &BTreeMap<ArticleName, ExportSignature>,
) -> BuildRecord {
    let mut diags: Vec<Diagnostic> = Vec::new();

    let mut import_sigs: BTreeMap<ArticleName, ContentHash> = BTreeMap::new();
    let mut imports: Vec<&ExportSignature> = Vec::new();
    for import in &article.environ.imports {
        match available_exports.get(import) {
            Some(sig) => {
                import_sigs.insert(import.clone(), sig.sig_hash);
                imports.push(sig);
            }
            None => diags.push(Diagnostic::for_article(
                &article.name,
                DiagnosticKind::Infrastructure,
                format!("no verified export available for import `{import}`"),
            )),
        }
    }

    // Effective bindings at the current item position. Imports seed the map
    // in declared order without overriding one another (first match wins);
    // own definitions are inserted as items are processed and do override
    // (local shadowing).
    let mut bindings: HashMap<String, i64> = HashMap::new();
    for sig in imports.iter().rev() {
        for entry in &sig.entries {
            if let ExportPayload::Definition { symbol, value } = &entry.payload {
                bindings.insert(symbol.clone(), *value);
            }
        }
    }
    // Reversed insertion above makes earlier imports override later ones.

    let mut poisoned: BTreeSet<String> = BTreeSet::new();
    let label_positions: HashMap<&str, usize> =
        article.items.iter().enumerate().map(|(i, item)| (item.label.as_str(), i)).collect();
    let import_set: BTreeSet<&ArticleName> = article.environ.imports.iter().collect();

    let mut entries: Vec<ExportEntry> = Vec::new();

    for (position, item) in article.items.iter().enumerate() {
        match &item.kind {
            ItemKind::Definition { symbol, body } => {
                match eval(body, &bindings, &poisoned) {
                    Ok(value) => {
                        bindings.insert(symbol.clone(), value);
                        entries.push(ExportEntry {
                            label: item.label.clone(),
                            payload: ExportPayload::Definition { symbol: symbol.clone(), value },
                        });
                    }
                    Err(Failure::Poisoned) => {
                        poisoned.insert(symbol.clone());
                    }
                    Err(Failure::Diag(kind, span, message)) => {
                        diags.push(Diagnostic::new(&article.name, span, kind, message));
                        poisoned.insert(symbol.clone());
                    }
                }
            }
            ItemKind::Theorem { lhs, rel, rhs, justification } => {
                if let Justification::Refs(refs) = justification {
                    for r in refs {
                        match &r.article {
                            None => match label_positions.get(r.label.as_str()) {
                                Some(&target) if target < position => {}
                                Some(_) => diags.push(Diagnostic::new(
                                    &article.name,
                                    r.span,
                                    DiagnosticKind::ForwardRef,
                                    format!(
                                        "reference `{}` points at an item that does not precede it",
                                        r.label
                                    ),
                                )),
                                None => diags.push(Diagnostic::new(
                                    &article.name,
                                    r.span,
                                    DiagnosticKind::UnresolvedRef,
                                    format!("no item labelled `{}` in this article", r.label),
                                )),
                            },
                            Some(target_article) => {
                                if !import_set.contains(target_article) {
                                    diags.push(Diagnostic::new(
                                        &article.name,
                                        r.span,
                                        DiagnosticKind::UndeclaredImportRef,
                                        format!(
                                            "reference `{r}` names an article missing from the environ"
                                        ),
                                    ));
                                } else if !available_exports
                                    .get(target_article)
                                    .is_some_and(|sig| sig.contains_label(&r.label))
                                {
                                    diags.push(Diagnostic::new(
                                        &article.name,
                                        r.span,
                                        DiagnosticKind::UnresolvedRef,
                                        format!("`{target_article}` exports no item labelled `{}`", r.label),
                                    ));
                                }
                            }
                        }
                    }
                }

                let left = eval(lhs, &bindings, &poisoned);
                let right = eval(rhs, &bindings, &poisoned);
                match (left, right) {
                    (Ok(l), Ok(r)) => {
                        if !rel.holds(l, r) {
                            diags.push(Diagnostic::new(
                                &article.name,
                                item.span,
                                DiagnosticKind::FalseStatement,
                                format!(
                                    "`{}` is false: left side is {l}, right side is {r}",
                                    format_statement(lhs, *rel, rhs)
                                ),
                            ));
                        }
                    }
                    (l, r) => {
                        for side in [l, r] {
                            if let Err(Failure::Diag(kind, span, message)) = side {
                                diags.push(Diagnostic::new(&article.name, span, kind, message));
                            }
                        }
                    }
                }

                entries.push(ExportEntry {
                    label: item.label.clone(),
                    payload: ExportPayload::Theorem {
                        statement: format_statement(lhs, *rel, rhs),
                    },
                });
            }
        }
    }

    if diags.is_empty() {
        let export = ExportSignature::new(article.name.clone(), entries);
        BuildRecord {
            article: article.name.clone(),
            source_hash,
            import_sigs,
            export: Some(export),
            verdict: Verdict::Verified,
        }
    } else {
        BuildRecord {
            article: article.name.clone(),
            source_hash,
            import_sigs,
            export: None,
            verdict: Verdict::Failed(diags),
        }
    }
}

enum Failure {
    /// The expression touches a symbol whose definition already failed;
    /// the root cause is reported, this one is not.
    Poisoned,
    Diag(DiagnosticKind, crate::lang::Span, String),
}

fn eval(
    expr: &Expr,
    bindings: &HashMap<String, i64>,
    poisoned: &BTreeSet<String>,
) -> Result<i64, Failure> {
    match expr {
        Expr::Int { value, .. } => Ok(*value),
        Expr::Ident { name, span } => match bindings.get(name) {
            Some(v) => Ok(*v),
            None if poisoned.contains(name) => Err(Failure::Poisoned),
            None => Err(Failure::Diag(
                DiagnosticKind::UnboundSymbol,
                *span,
                format!("`{name}` is not defined here or in any import"),
            )),
        },
        Expr::Binary { op, lhs, rhs, span } => {
            let l = eval(lhs, bindings, poisoned)?;
            let r = eval(rhs, bindings, poisoned)?;
            let result = match op {
                BinOp::Add => l.checked_add(r),
                BinOp::Sub => l.checked_sub(r),
                BinOp::Mul => l.checked_mul(r),
            };
            result.ok_or_else(|| {
                Failure::Diag(DiagnosticKind::Overflow, *span, "arithmetic overflow".into())
            })
        }
        Expr::Paren { inner, .. } => eval(inner, bindings, poisoned),
    }
}
