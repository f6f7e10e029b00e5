//! The article language: a small formal language of integer definitions and
//! relational theorems, with a declared import environment. An article is one
//! `.fml` file whose base name equals the declared article name.
//!
//! All operations here are pure functions over immutable inputs.

pub mod ast;
pub mod eval;
pub mod format;
pub mod lexer;
pub mod parser;

pub use ast::{
    Article, ArticleName, BinOp, EnvironDecl, Expr, InvalidName, Item, ItemKind, Justification,
    Ref, Rel, Span,
};
pub use eval::{evaluate_expr, evaluate_with, EvalError};
pub use format::{format_article, format_expr, format_item, format_statement};
pub use parser::{parse_article, parse_environ, parse_environ_counting, ParseError, ParseErrorKind};

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn name(s: &str) -> ArticleName {
        ArticleName::new(s).unwrap()
    }

    #[test]
    fn empty_article() {
        let a = parse_article("article a\nenviron\nbegin\n", &name("a")).unwrap();
        assert_eq!(a.name, name("a"));
        assert!(a.environ.imports.is_empty());
        assert!(a.items.is_empty());
    }

    #[test]
    fn article_with_import_def_and_thm() {
        // Hand-trace of the grammar: one import, one definition, one theorem.
        let src = "article g\nenviron imports b;\nbegin\ndef d1 : c := 2;\nthm t1 : c*c = 4 by d1;\n";
        let a = parse_article(src, &name("g")).unwrap();
        assert_eq!(a.environ.imports, vec![name("b")]);
        assert_eq!(a.items.len(), 2);
        match &a.items[0].kind {
            ItemKind::Definition { symbol, body } => {
                assert_eq!(symbol, "c");
                assert_eq!(body, &Expr::Int { value: 2, span: Span::new(1, 1) });
            }
            other => panic!("expected definition, got {other:?}"),
        }
        match &a.items[1].kind {
            ItemKind::Theorem { rel, justification, .. } => {
                assert_eq!(*rel, Rel::Eq);
                assert_eq!(
                    justification,
                    &Justification::Refs(vec![Ref {
                        article: None,
                        label: "d1".into(),
                        span: Span::new(1, 1),
                    }])
                );
            }
            other => panic!("expected theorem, got {other:?}"),
        }
    }

    #[test]
    fn self_import_is_rejected() {
        let err = parse_article("article g\nenviron imports g;\nbegin\n", &name("g")).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::SelfImport);
    }

    #[test]
    fn duplicate_import_is_rejected() {
        let err = parse_article("article g\nenviron imports b, b;\nbegin\n", &name("g")).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DuplicateImport);
    }

    #[test]
    fn duplicate_label_is_rejected() {
        let src = "article g\nenviron\nbegin\ndef d : x := 1;\nthm d : x = 1 by evaluation;\n";
        let err = parse_article(src, &name("g")).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DuplicateLabel);
    }

    #[test]
    fn duplicate_symbol_is_rejected() {
        let src = "article g\nenviron\nbegin\ndef d1 : x := 1;\ndef d2 : x := 2;\n";
        let err = parse_article(src, &name("g")).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DuplicateSymbol);
    }

    #[test]
    fn name_mismatch() {
        let err = parse_article("article b\nenviron\nbegin\n", &name("a")).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NameMismatch);
    }

    #[test]
    fn import_order_is_preserved() {
        let src = "article g\nenviron imports z, a, m;\nbegin\n";
        let a = parse_article(src, &name("g")).unwrap();
        assert_eq!(a.environ.imports, vec![name("z"), name("a"), name("m")]);
    }

    #[test]
    fn environ_ignores_the_body() {
        // The body is garbage; the header-only pass must still succeed while
        // the full parse fails on the same input.
        let src = "article a\nenviron imports x, y;\nbegin\n<garbage body>";
        let env = parse_environ(src).unwrap();
        assert_eq!(env.imports, vec![name("x"), name("y")]);
        assert!(parse_article(src, &name("a")).is_err());
    }

    #[test]
    fn environ_empty() {
        assert!(parse_environ("article a\nenviron\nbegin\n").unwrap().imports.is_empty());
    }

    #[test]
    fn environ_matches_full_parse() {
        let sources = [
            "article a\nenviron\nbegin\n",
            "article a\nenviron imports b;\nbegin\ndef d : x := 1;\n",
            "article a\nenviron imports b, c, d;\nbegin\nthm t : 1 < 2 by evaluation;\n",
        ];
        for src in sources {
            let full = parse_article(src, &name("a")).unwrap();
            assert_eq!(parse_environ(src).unwrap(), full.environ);
        }
    }

    #[test]
    fn environ_cost_is_header_proportional() {
        // Same header, bodies of ~1 KB and ~10 MB: identical result and the
        // pass must not consume meaningfully past the header.
        let header = "article a\nenviron imports x, y;\nbegin\n";
        let body = |n: usize| -> String {
            (0..n).map(|i| format!("thm t{i} : 1 < 2 by evaluation;\n")).collect()
        };
        let small = format!("{header}{}", body(32));
        let big = format!("{header}{}", body(300_000));
        assert!(big.len() > 10_000_000);

        let (env_small, consumed_small) = parse_environ_counting(&small).unwrap();
        let (env_big, consumed_big) = parse_environ_counting(&big).unwrap();
        assert_eq!(env_small, env_big);
        assert_eq!(consumed_small, consumed_big);
        assert!(consumed_big <= header.len() + 1, "consumed {consumed_big} bytes");

        let full = parse_article(&big, &name("a")).unwrap();
        assert_eq!(full.environ, env_big);
    }

    #[test]
    fn eval_literal() {
        let five = Expr::Int { value: 5, span: Span::new(1, 1) };
        assert_eq!(evaluate_expr(&five, &BTreeMap::new()).unwrap(), 5);
    }

    #[test]
    fn eval_arithmetic_identity() {
        // (1+2)*c with c=4 → 12
        let src = "article a\nenviron\nbegin\ndef d : y := (1+2)*c;\n";
        let a = parse_article(src, &ArticleName::new("a").unwrap()).unwrap();
        let body = match &a.items[0].kind {
            ItemKind::Definition { body, .. } => body,
            _ => unreachable!(),
        };
        let mut bindings = BTreeMap::new();
        bindings.insert("c".to_owned(), 4);
        assert_eq!(evaluate_expr(body, &bindings).unwrap(), 12);
    }

    #[test]
    fn eval_overflow() {
        // c+c with c = 2^62: the true sum is 2^63, one past i64::MAX, so the
        // checked add must fail. Wide-integer check: (1i128<<62)+(1i128<<62)
        // = 1i128<<63 > i64::MAX as i128.
        assert!((1i128 << 62) + (1i128 << 62) > i64::MAX as i128);
        let c = 1i64 << 62;
        let expr = Expr::Binary {
            op: BinOp::Add,
            lhs: Box::new(Expr::Ident { name: "c".into(), span: Span::new(1, 1) }),
            rhs: Box::new(Expr::Ident { name: "c".into(), span: Span::new(1, 5) }),
            span: Span::new(1, 3),
        };
        let mut bindings = BTreeMap::new();
        bindings.insert("c".to_owned(), c);
        assert_eq!(
            evaluate_expr(&expr, &bindings),
            Err(EvalError::Overflow { span: Span::new(1, 3) })
        );
    }

    #[test]
    fn eval_unbound() {
        let expr = Expr::Ident { name: "zz".into(), span: Span::new(3, 7) };
        match evaluate_expr(&expr, &BTreeMap::new()) {
            Err(EvalError::UnboundIdentifier { name, span }) => {
                assert_eq!(name, "zz");
                assert_eq!(span, Span::new(3, 7));
            }
            other => panic!("expected unbound error, got {other:?}"),
        }
    }

    #[test]
    fn eval_is_pure() {
        let src = "article a\nenviron\nbegin\ndef d : y := x * x - 3;\n";
        let a = parse_article(src, &name("a")).unwrap();
        let body = match &a.items[0].kind {
            ItemKind::Definition { body, .. } => body.clone(),
            _ => unreachable!(),
        };
        let mut bindings = BTreeMap::new();
        bindings.insert("x".to_owned(), 9);
        let first = evaluate_expr(&body, &bindings).unwrap();
        for _ in 0..5 {
            assert_eq!(evaluate_expr(&body, &bindings).unwrap(), first);
        }
    }

    #[test]
    fn round_trip_corpus() {
        let sources = [
            "article a\nenviron\nbegin\n",
            "article g\nenviron imports b;\nbegin\ndef d1 : c := 2;\nthm t1 : c*c = 4 by d1;\n",
            "article g\nenviron imports b, x9;\nbegin\nthm t : (1 + 2) * 3 <= 9 by evaluation;\n",
            "article g\nenviron\nbegin\ndef d : v := -5 + 3 * (2 - -7);\n",
            "article g\nenviron imports q;\nbegin\nthm t : v < 10 by q:lem, d0;\ndef d0 : w := ((v));\n",
        ];
        for src in sources {
            let parsed = parse_article(src, &name(src.split_whitespace().nth(1).unwrap())).unwrap();
            let formatted = format_article(&parsed);
            let reparsed = parse_article(&formatted, &parsed.name).unwrap();
            assert_eq!(reparsed, parsed, "round trip failed for {src:?}");
        }
    }

    #[test]
    fn negative_literal_positions() {
        // `-` binds as a literal sign only where a factor is expected.
        let src = "article a\nenviron\nbegin\ndef d : x := 3 - -2;\nthm t : -1 < 0 by evaluation;\n";
        let a = parse_article(src, &name("a")).unwrap();
        let body = match &a.items[0].kind {
            ItemKind::Definition { body, .. } => body,
            _ => unreachable!(),
        };
        assert_eq!(evaluate_expr(body, &BTreeMap::new()).unwrap(), 5);
    }

    #[test]
    fn int_boundaries() {
        let src = format!(
            "article a\nenviron\nbegin\ndef d : x := {};\ndef e : y := -{};\n",
            i64::MAX,
            (i64::MAX as u64) + 1
        );
        let a = parse_article(&src, &name("a")).unwrap();
        let values: Vec<i64> = a
            .items
            .iter()
            .map(|i| match &i.kind {
                ItemKind::Definition { body, .. } => evaluate_expr(body, &BTreeMap::new()).unwrap(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(values, vec![i64::MAX, i64::MIN]);

        let over = format!("article a\nenviron\nbegin\ndef d : x := {};\n", (i64::MAX as u64) + 1);
        assert_eq!(
            parse_article(&over, &name("a")).unwrap_err().kind,
            ParseErrorKind::IntOutOfRange
        );
    }

    #[test]
    fn parse_error_carries_position() {
        let err = parse_article("article a\nenviron\nbegin\ndef d : x := ;\n", &name("a"))
            .unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
        assert_eq!((err.line, err.column), (4, 14));
    }
}
