//! Hand-rolled streaming lexer. Tokens are produced on demand so the
//! header-only pass never touches the article body.

use super::ast::Span;
use super::parser::{ParseError, ParseErrorKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    // keywords
    Article,
    Environ,
    Imports,
    Begin,
    Def,
    Thm,
    By,
    Evaluation,
    // literals and names
    Ident(String),
    /// Unsigned magnitude; the parser applies the optional leading minus.
    Int(u64),
    // punctuation
    Comma,
    Semi,
    Colon,
    Assign, // :=
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
    RelEq, // =
    RelLt, // <
    RelLe, // <=
    Newline,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Article => "`article`".into(),
            Tok::Environ => "`environ`".into(),
            Tok::Imports => "`imports`".into(),
            Tok::Begin => "`begin`".into(),
            Tok::Def => "`def`".into(),
            Tok::Thm => "`thm`".into(),
            Tok::By => "`by`".into(),
            Tok::Evaluation => "`evaluation`".into(),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::RelEq => "`=`".into(),
            Tok::RelLt => "`<`".into(),
            Tok::RelLe => "`<=`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

pub struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    column: u32,
}

impl<'a> Lexer<'a> {
    pub fn new(source: &'a str) -> Self {
        Lexer { src: source.as_bytes(), pos: 0, line: 1, column: 1 }
    }

    /// Bytes consumed so far. The header-only pass asserts this stays
    /// proportional to the header, not the whole article.
    pub fn bytes_consumed(&self) -> usize {
        self.pos
    }

    fn peek_byte(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek_byte()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.column = 1;
        } else if b & 0xC0 != 0x80 {
            // count characters, not UTF-8 continuation bytes
            self.column += 1;
        }
        Some(b)
    }

    /// Skip spaces, tabs, carriage returns and `--` comments. Stops before
    /// newlines, which are tokens of their own.
    fn skip_trivia(&mut self) {
        loop {
            match self.peek_byte() {
                Some(b' ') | Some(b'\t') | Some(b'\r') => {
                    self.bump();
                }
                Some(b'-') if self.src.get(self.pos + 1) == Some(&b'-') => {
                    while let Some(b) = self.peek_byte() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    pub fn next_token(&mut self) -> Result<(Tok, Span), ParseError> {
        self.skip_trivia();
        let span = Span::new(self.line, self.column);
        let b = match self.peek_byte() {
            None => return Ok((Tok::Eof, span)),
            Some(b) => b,
        };
        let tok = match b {
            b'\n' => {
                self.bump();
                Tok::Newline
            }
            b',' => {
                self.bump();
                Tok::Comma
            }
            b';' => {
                self.bump();
                Tok::Semi
            }
            b':' => {
                self.bump();
                if self.peek_byte() == Some(b'=') {
                    self.bump();
                    Tok::Assign
                } else {
                    Tok::Colon
                }
            }
            b'+' => {
                self.bump();
                Tok::Plus
            }
            b'-' => {
                // `--` was consumed as a comment in skip_trivia
                self.bump();
                Tok::Minus
            }
            b'*' => {
                self.bump();
                Tok::Star
            }
            b'(' => {
                self.bump();
                Tok::LParen
            }
            b')' => {
                self.bump();
                Tok::RParen
            }
            b'=' => {
                self.bump();
                Tok::RelEq
            }
            b'<' => {
                self.bump();
                if self.peek_byte() == Some(b'=') {
                    self.bump();
                    Tok::RelLe
                } else {
                    Tok::RelLt
                }
            }
            b'0'..=b'9' => {
                let mut digits = String::new();
                while let Some(d @ b'0'..=b'9') = self.peek_byte() {
                    digits.push(d as char);
                    self.bump();
                }
                let value: u64 = digits.parse().map_err(|_| ParseError {
                    line: span.line,
                    column: span.column,
                    kind: ParseErrorKind::IntOutOfRange,
                    message: format!("integer literal `{digits}` exceeds the 64-bit range"),
                })?;
                Tok::Int(value)
            }
            b'a'..=b'z' => {
                let mut word = String::new();
                while let Some(c) = self.peek_byte() {
                    if c.is_ascii_lowercase() || c.is_ascii_digit() || c == b'_' {
                        word.push(c as char);
                        self.bump();
                    } else {
                        break;
                    }
                }
                match word.as_str() {
                    "article" => Tok::Article,
                    "environ" => Tok::Environ,
                    "imports" => Tok::Imports,
                    "begin" => Tok::Begin,
                    "def" => Tok::Def,
                    "thm" => Tok::Thm,
                    "by" => Tok::By,
                    "evaluation" => Tok::Evaluation,
                    _ => Tok::Ident(word),
                }
            }
            other => {
                return Err(ParseError {
                    line: span.line,
                    column: span.column,
                    kind: ParseErrorKind::Syntax,
                    message: format!("unexpected character `{}`", escape_byte(other)),
                });
            }
        };
        Ok((tok, span))
    }
}

fn escape_byte(b: u8) -> String {
    if b.is_ascii_graphic() || b == b' ' {
        (b as char).to_string()
    } else {
        format!("\\x{b:02x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex_all(src: &str) -> Vec<Tok> {
        let mut lexer = Lexer::new(src);
        let mut out = Vec::new();
        loop {
            let (tok, _) = lexer.next_token().unwrap();
            let done = tok == Tok::Eof;
            out.push(tok);
            if done {
                return out;
            }
        }
    }

    #[test]
    fn keywords_and_punctuation() {
        let toks = lex_all("def x : y := 1 + 2 * (3 - 4);");
        assert_eq!(
            toks,
            vec![
                Tok::Def,
                Tok::Ident("x".into()),
                Tok::Colon,
                Tok::Ident("y".into()),
                Tok::Assign,
                Tok::Int(1),
                Tok::Plus,
                Tok::Int(2),
                Tok::Star,
                Tok::LParen,
                Tok::Int(3),
                Tok::Minus,
                Tok::Int(4),
                Tok::RParen,
                Tok::Semi,
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn comments_run_to_end_of_line() {
        let toks = lex_all("1 -- everything here is skipped ; < >\n2");
        assert_eq!(toks, vec![Tok::Int(1), Tok::Newline, Tok::Int(2), Tok::Eof]);
    }

    #[test]
    fn double_minus_is_always_a_comment() {
        // `1--2` is `1` followed by a comment, per the comment rule.
        let toks = lex_all("1--2");
        assert_eq!(toks, vec![Tok::Int(1), Tok::Eof]);
    }

    #[test]
    fn relations() {
        assert_eq!(lex_all("< <= ="), vec![Tok::RelLt, Tok::RelLe, Tok::RelEq, Tok::Eof]);
    }

    #[test]
    fn spans_are_one_based() {
        let mut lexer = Lexer::new("ab\n  cd");
        let (_, s1) = lexer.next_token().unwrap();
        assert_eq!((s1.line, s1.column), (1, 1));
        let (_, s2) = lexer.next_token().unwrap(); // newline
        assert_eq!((s2.line, s2.column), (1, 3));
        let (_, s3) = lexer.next_token().unwrap();
        assert_eq!((s3.line, s3.column), (2, 3));
    }

    #[test]
    fn oversized_integer_is_an_error() {
        let mut lexer = Lexer::new("99999999999999999999999999");
        let err = lexer.next_token().unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::IntOutOfRange);
    }
}
