//! Expression evaluation: checked 64-bit integer arithmetic over a binding
//! environment. Overflow is an error, never wrap-around — a statement must
//! not come out true by accident of machine width.

use super::ast::{BinOp, Expr, Span};
use std::collections::BTreeMap;

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("{span}: unbound identifier `{name}`")]
    UnboundIdentifier { name: String, span: Span },
    #[error("{span}: arithmetic overflow")]
    Overflow { span: Span },
}

impl EvalError {
    pub fn span(&self) -> Span {
        match self {
            EvalError::UnboundIdentifier { span, .. } | EvalError::Overflow { span } => *span,
        }
    }
}

/// Evaluate `expr` with every identifier looked up in `bindings`.
pub fn evaluate_expr(expr: &Expr, bindings: &BTreeMap<String, i64>) -> Result<i64, EvalError> {
    evaluate_with(expr, &|name| bindings.get(name).copied())
}

/// Evaluation against an arbitrary lookup function; the verifier supplies
/// its scope-sensitive resolution here.
pub fn evaluate_with(
    expr: &Expr,
    lookup: &dyn Fn(&str) -> Option<i64>,
) -> Result<i64, EvalError> {
    match expr {
        Expr::Int { value, .. } => Ok(*value),
        Expr::Ident { name, span } => lookup(name).ok_or_else(|| EvalError::UnboundIdentifier {
            name: name.clone(),
            span: *span,
        }),
        Expr::Binary { op, lhs, rhs, span } => {
            let l = evaluate_with(lhs, lookup)?;
            let r = evaluate_with(rhs, lookup)?;
            let result = match op {
                BinOp::Add => l.checked_add(r),
                BinOp::Sub => l.checked_sub(r),
                BinOp::Mul => l.checked_mul(r),
            };
            result.ok_or(EvalError::Overflow { span: *span })
        }
        Expr::Paren { inner, .. } => evaluate_with(inner, lookup),
    }
}
