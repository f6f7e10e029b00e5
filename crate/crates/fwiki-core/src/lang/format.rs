//! Canonical formatter. For any parsed article, `parse(format(a)) == a`
//! structurally; formatted theorem statements are also the canonical text
//! that export signatures hash.

use super::ast::*;
use std::fmt::Write;

pub fn format_article(article: &Article) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "article {}", article.name);
    if article.environ.imports.is_empty() {
        out.push_str("environ\n");
    } else {
        let names: Vec<&str> = article.environ.imports.iter().map(|n| n.as_str()).collect();
        let _ = writeln!(out, "environ imports {};", names.join(", "));
    }
    out.push_str("begin\n");
    for item in &article.items {
        out.push_str(&format_item(item));
        out.push('\n');
    }
    out
}

pub fn format_item(item: &Item) -> String {
    match &item.kind {
        ItemKind::Definition { symbol, body } => {
            format!("def {} : {} := {};", item.label, symbol, format_expr(body))
        }
        ItemKind::Theorem { lhs, rel, rhs, justification } => {
            let by = match justification {
                Justification::Evaluation => "evaluation".to_owned(),
                Justification::Refs(refs) => {
                    refs.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", ")
                }
            };
            format!("thm {} : {} by {};", item.label, format_statement(lhs, *rel, rhs), by)
        }
    }
}

/// The canonical statement text of a theorem, justification excluded.
pub fn format_statement(lhs: &Expr, rel: Rel, rhs: &Expr) -> String {
    format!("{} {} {}", format_expr(lhs), rel.symbol(), format_expr(rhs))
}

pub fn format_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr);
    out
}

fn write_expr(out: &mut String, expr: &Expr) {
    match expr {
        Expr::Int { value, .. } => {
            let _ = write!(out, "{value}");
        }
        Expr::Ident { name, .. } => out.push_str(name),
        Expr::Binary { op, lhs, rhs, .. } => {
            write_expr(out, lhs);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs);
        }
        Expr::Paren { inner, .. } => {
            out.push('(');
            write_expr(out, inner);
            out.push(')');
        }
    }
}
