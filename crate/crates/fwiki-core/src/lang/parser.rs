//! Recursive-descent parser for the article language.
//!
//! Grammar (whitespace is spaces/tabs/newlines, `--` comments to end of line):
//!
//! ```text
//! article := "article" NAME NL environ "begin" NL item*
//! environ := "environ" [ "imports" NAME ("," NAME)* ";" ] NL
//! item    := def | thm
//! def     := "def" LABEL ":" IDENT ":=" expr ";"
//! thm     := "thm" LABEL ":" expr REL expr "by" ref ("," ref)* ";"
//!          | "thm" LABEL ":" expr REL expr "by" "evaluation" ";"
//! ref     := [NAME ":"] LABEL
//! expr    := term (("+"|"-") term)*
//! term    := factor ("*" factor)*
//! factor  := INT | IDENT | "(" expr ")"
//! REL     := "=" | "<" | "<="
//! ```
//!
//! The header (everything through `begin`) is line-structured; item syntax is
//! free-form. [`parse_environ`] reads only the header, so its cost is
//! proportional to the header length no matter how large the body is.

use super::ast::*;
use super::lexer::{Lexer, Tok};
use std::collections::HashSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    NameMismatch,
    DuplicateLabel,
    DuplicateSymbol,
    DuplicateImport,
    SelfImport,
    IntOutOfRange,
}

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl ParseError {
    fn at(span: Span, kind: ParseErrorKind, message: impl Into<String>) -> Self {
        ParseError { line: span.line, column: span.column, kind, message: message.into() }
    }
}

/// Parse a complete article. `expected_name` is the source file's base name;
/// a differing header name is a [`ParseErrorKind::NameMismatch`].
pub fn parse_article(source_text: &str, expected_name: &ArticleName) -> Result<Article, ParseError> {
    let mut p = Parser::new(source_text);
    let (name, environ) = p.header()?;
    if &name != expected_name {
        return Err(ParseError::at(
            p.header_name_span,
            ParseErrorKind::NameMismatch,
            format!("article is named `{name}` but the file requires `{expected_name}`"),
        ));
    }
    let items = p.items()?;
    Ok(Article { name, environ, items })
}

/// Header-only pass: extract the declared environment without looking at the
/// body. Body malformations are not detected here.
pub fn parse_environ(source_text: &str) -> Result<EnvironDecl, ParseError> {
    let mut p = Parser::new(source_text);
    let (_, environ) = p.header()?;
    Ok(environ)
}

/// Like [`parse_environ`], but also reports how many input bytes were
/// consumed. Exists so tests can pin the header-only cost model.
pub fn parse_environ_counting(source_text: &str) -> Result<(EnvironDecl, usize), ParseError> {
    let mut p = Parser::new(source_text);
    let (_, environ) = p.header()?;
    Ok((environ, p.lexer.bytes_consumed()))
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    lookahead: Option<(Tok, Span)>,
    header_name_span: Span,
}

impl<'a> Parser<'a> {
    fn new(source: &'a str) -> Self {
        Parser { lexer: Lexer::new(source), lookahead: None, header_name_span: Span::new(1, 1) }
    }

    fn next_raw(&mut self) -> Result<(Tok, Span), ParseError> {
        match self.lookahead.take() {
            Some(t) => Ok(t),
            None => self.lexer.next_token(),
        }
    }

    fn peek_raw(&mut self) -> Result<&(Tok, Span), ParseError> {
        if self.lookahead.is_none() {
            self.lookahead = Some(self.lexer.next_token()?);
        }
        Ok(self.lookahead.as_ref().unwrap())
    }

    /// Next token with newlines skipped (body syntax is free-form).
    fn next_tok(&mut self) -> Result<(Tok, Span), ParseError> {
        loop {
            let t = self.next_raw()?;
            if t.0 != Tok::Newline {
                return Ok(t);
            }
        }
    }

    fn peek_tok(&mut self) -> Result<&(Tok, Span), ParseError> {
        while self.peek_raw()?.0 == Tok::Newline {
            self.next_raw()?;
        }
        self.peek_raw()
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<Span, ParseError> {
        let (tok, span) = self.next_tok()?;
        if &tok == want {
            Ok(span)
        } else {
            Err(ParseError::at(
                span,
                ParseErrorKind::Syntax,
                format!("expected {what}, found {}", tok.describe()),
            ))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        let (tok, span) = self.next_tok()?;
        match tok {
            Tok::Ident(s) => Ok((s, span)),
            other => Err(ParseError::at(
                span,
                ParseErrorKind::Syntax,
                format!("expected {what}, found {}", other.describe()),
            )),
        }
    }

    /// The newline (or end of input) terminating a header line. Consumes
    /// exactly one token so the header-only pass never reads into the body;
    /// blank lines are absorbed by the newline-skipping token readers.
    fn expect_line_end(&mut self) -> Result<(), ParseError> {
        let (tok, span) = self.next_raw()?;
        match tok {
            Tok::Newline | Tok::Eof => Ok(()),
            other => Err(ParseError::at(
                span,
                ParseErrorKind::Syntax,
                format!("expected end of line, found {}", other.describe()),
            )),
        }
    }

    fn skip_blank_lines(&mut self) -> Result<(), ParseError> {
        while self.peek_raw()?.0 == Tok::Newline {
            self.next_raw()?;
        }
        Ok(())
    }

    /// `"article" NAME NL environ "begin" NL`
    fn header(&mut self) -> Result<(ArticleName, EnvironDecl), ParseError> {
        self.skip_blank_lines()?;
        self.expect(&Tok::Article, "`article`")?;
        let (raw_name, name_span) = self.expect_ident("an article name")?;
        self.header_name_span = name_span;
        let name = ArticleName::new(&raw_name)
            .map_err(|e| ParseError::at(name_span, ParseErrorKind::Syntax, e.to_string()))?;
        self.expect_line_end()?;

        self.expect(&Tok::Environ, "`environ`")?;
        let mut imports = Vec::new();
        let mut seen = HashSet::new();
        if self.peek_raw()?.0 == Tok::Imports {
            self.next_raw()?;
            loop {
                let (raw, span) = self.expect_ident("an imported article name")?;
                let import = ArticleName::new(&raw)
                    .map_err(|e| ParseError::at(span, ParseErrorKind::Syntax, e.to_string()))?;
                if import == name {
                    return Err(ParseError::at(
                        span,
                        ParseErrorKind::SelfImport,
                        format!("article `{name}` must not import itself"),
                    ));
                }
                if !seen.insert(import.clone()) {
                    return Err(ParseError::at(
                        span,
                        ParseErrorKind::DuplicateImport,
                        format!("duplicate import `{import}`"),
                    ));
                }
                imports.push(import);
                let (tok, span) = self.next_raw()?;
                match tok {
                    Tok::Comma => continue,
                    Tok::Semi => break,
                    other => {
                        return Err(ParseError::at(
                            span,
                            ParseErrorKind::Syntax,
                            format!("expected `,` or `;` in import list, found {}", other.describe()),
                        ));
                    }
                }
            }
        }
        self.expect_line_end()?;

        self.expect(&Tok::Begin, "`begin`")?;
        self.expect_line_end()?;
        Ok((name, EnvironDecl { imports }))
    }

    fn items(&mut self) -> Result<Vec<Item>, ParseError> {
        let mut items = Vec::new();
        let mut labels = HashSet::new();
        let mut symbols = HashSet::new();
        loop {
            let (tok, span) = self.next_tok()?;
            let item = match tok {
                Tok::Eof => break,
                Tok::Def => self.def_item(span)?,
                Tok::Thm => self.thm_item(span)?,
                other => {
                    return Err(ParseError::at(
                        span,
                        ParseErrorKind::Syntax,
                        format!("expected `def` or `thm`, found {}", other.describe()),
                    ));
                }
            };
            if !labels.insert(item.label.clone()) {
                return Err(ParseError::at(
                    item.span,
                    ParseErrorKind::DuplicateLabel,
                    format!("duplicate label `{}`", item.label),
                ));
            }
            if let ItemKind::Definition { symbol, .. } = &item.kind {
                if !symbols.insert(symbol.clone()) {
                    return Err(ParseError::at(
                        item.span,
                        ParseErrorKind::DuplicateSymbol,
                        format!("symbol `{symbol}` is already defined in this article"),
                    ));
                }
            }
            items.push(item);
        }
        Ok(items)
    }

    fn def_item(&mut self, span: Span) -> Result<Item, ParseError> {
        let (label, _) = self.expect_ident("a label")?;
        self.expect(&Tok::Colon, "`:`")?;
        let (symbol, _) = self.expect_ident("the defined symbol")?;
        self.expect(&Tok::Assign, "`:=`")?;
        let body = self.expr()?;
        self.expect(&Tok::Semi, "`;`")?;
        Ok(Item { label, kind: ItemKind::Definition { symbol, body }, span })
    }

    fn thm_item(&mut self, span: Span) -> Result<Item, ParseError> {
        let (label, _) = self.expect_ident("a label")?;
        self.expect(&Tok::Colon, "`:`")?;
        let lhs = self.expr()?;
        let (rel_tok, rel_span) = self.next_tok()?;
        let rel = match rel_tok {
            Tok::RelEq => Rel::Eq,
            Tok::RelLt => Rel::Lt,
            Tok::RelLe => Rel::Le,
            other => {
                return Err(ParseError::at(
                    rel_span,
                    ParseErrorKind::Syntax,
                    format!("expected `=`, `<` or `<=`, found {}", other.describe()),
                ));
            }
        };
        let rhs = self.expr()?;
        self.expect(&Tok::By, "`by`")?;
        let justification = if self.peek_tok()?.0 == Tok::Evaluation {
            self.next_tok()?;
            Justification::Evaluation
        } else {
            let mut refs = vec![self.reference()?];
            while self.peek_tok()?.0 == Tok::Comma {
                self.next_tok()?;
                refs.push(self.reference()?);
            }
            Justification::Refs(refs)
        };
        self.expect(&Tok::Semi, "`;`")?;
        Ok(Item { label, kind: ItemKind::Theorem { lhs, rel, rhs, justification }, span })
    }

    fn reference(&mut self) -> Result<Ref, ParseError> {
        let (first, span) = self.expect_ident("a reference")?;
        if self.peek_tok()?.0 == Tok::Colon {
            self.next_tok()?;
            let article = ArticleName::new(&first)
                .map_err(|e| ParseError::at(span, ParseErrorKind::Syntax, e.to_string()))?;
            let (label, _) = self.expect_ident("a label after `:`")?;
            Ok(Ref { article: Some(article), label, span })
        } else {
            Ok(Ref { article: None, label: first, span })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_tok()?.0 {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let (_, op_span) = self.next_tok()?;
            let rhs = self.term()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), span: op_span };
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while self.peek_tok()?.0 == Tok::Star {
            let (_, op_span) = self.next_tok()?;
            let rhs = self.factor()?;
            lhs = Expr::Binary { op: BinOp::Mul, lhs: Box::new(lhs), rhs: Box::new(rhs), span: op_span };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let (tok, span) = self.next_tok()?;
        match tok {
            Tok::Int(magnitude) => Ok(Expr::Int { value: int_value(false, magnitude, span)?, span }),
            Tok::Minus => {
                let (tok, int_span) = self.next_tok()?;
                match tok {
                    Tok::Int(magnitude) => {
                        Ok(Expr::Int { value: int_value(true, magnitude, span)?, span })
                    }
                    other => Err(ParseError::at(
                        int_span,
                        ParseErrorKind::Syntax,
                        format!("expected digits after `-`, found {}", other.describe()),
                    )),
                }
            }
            Tok::Ident(name) => Ok(Expr::Ident { name, span }),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(Expr::Paren { inner: Box::new(inner), span })
            }
            other => Err(ParseError::at(
                span,
                ParseErrorKind::Syntax,
                format!("expected an expression, found {}", other.describe()),
            )),
        }
    }
}

fn int_value(negative: bool, magnitude: u64, span: Span) -> Result<i64, ParseError> {
    if negative {
        if magnitude > (i64::MAX as u64) + 1 {
            return Err(ParseError::at(
                span,
                ParseErrorKind::IntOutOfRange,
                format!("integer literal `-{magnitude}` is below the 64-bit signed range"),
            ));
        }
        Ok((magnitude as i128).wrapping_neg() as i64)
    } else {
        if magnitude > i64::MAX as u64 {
            return Err(ParseError::at(
                span,
                ParseErrorKind::IntOutOfRange,
                format!("integer literal `{magnitude}` is above the 64-bit signed range"),
            ));
        }
        Ok(magnitude as i64)
    }
}
