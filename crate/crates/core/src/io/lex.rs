//! Line tokenizer shared by the `.pnet` and `.align` readers.

use std::fmt;

use thiserror::Error;

use crate::diag::{Diagnostic, Span};

/// A syntax or semantic error in a text document, with its position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{code} at {span}: {message}")]
pub struct ParseError {
    pub code: &'static str,
    pub message: String,
    pub span: Span,
}

impl ParseError {
    pub fn new(code: &'static str, span: Span, message: impl Into<String>) -> Self {
        ParseError {
            code,
            message: message.into(),
            span,
        }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic::error(self.code, self.message.clone()).with_span(self.span)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    /// A double-quoted string; `text` holds the unescaped contents.
    Quoted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::Word => f.write_str(&self.text),
            TokenKind::Quoted => write!(f, "{}", quote(&self.text)),
        }
    }
}

/// Splits a document into lines of whitespace-separated tokens, dropping
/// blank lines and `#` comments. Each entry carries the span of its line.
pub fn tokenize(text: &str) -> Result<Vec<Line>, ParseError> {
    let mut lines = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let tokens = tokenize_line(raw, line)?;
        if !tokens.is_empty() {
            lines.push((Span { line, column: 1 }, tokens));
        }
    }
    Ok(lines)
}

fn tokenize_line(raw: &str, line: usize) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = raw.chars().enumerate().peekable();
    while let Some(&(col, c)) = chars.peek() {
        let span = Span {
            line,
            column: col + 1,
        };
        if c.is_whitespace() {
            chars.next();
        } else if c == '#' {
            break;
        } else if c == '"' {
            chars.next();
            let mut text = String::new();
            loop {
                match chars.next() {
                    None => return Err(ParseError::new("E_SYNTAX", span, "unterminated string")),
                    Some((_, '"')) => break,
                    Some((ecol, '\\')) => match chars.next() {
                        Some((_, '"')) => text.push('"'),
                        Some((_, '\\')) => text.push('\\'),
                        _ => {
                            return Err(ParseError::new(
                                "E_SYNTAX",
                                Span {
                                    line,
                                    column: ecol + 1,
                                },
                                "only \\\" and \\\\ escapes are allowed in strings",
                            ))
                        }
                    },
                    Some((_, ch)) => text.push(ch),
                }
            }
            if let Some(&(_, next)) = chars.peek() {
                if !next.is_whitespace() && next != '#' {
                    return Err(ParseError::new(
                        "E_SYNTAX",
                        span,
                        "a string must be followed by whitespace",
                    ));
                }
            }
            tokens.push(Token {
                kind: TokenKind::Quoted,
                text,
                span,
            });
        } else {
            let mut text = String::new();
            while let Some(&(_, ch)) = chars.peek() {
                if ch.is_whitespace() || ch == '#' || ch == '"' {
                    break;
                }
                text.push(ch);
                chars.next();
            }
            tokens.push(Token {
                kind: TokenKind::Word,
                text,
                span,
            });
        }
    }
    Ok(tokens)
}

/// Renders `s` as a double-quoted string literal.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// The tokens of one non-empty line, with the line's position.
pub type Line = (Span, Vec<Token>);

/// Reads the `<keyword> "<name>"` header line that opens every document.
pub fn header<'a>(lines: &'a [Line], keyword: &str) -> Result<(String, &'a [Line]), ParseError> {
    let Some(((span, first), rest)) = lines.split_first() else {
        return Err(ParseError::new(
            "E_MISSING_HEADER",
            Span { line: 1, column: 1 },
            format!("document must start with `{keyword} \"<name>\"`"),
        ));
    };
    match first.as_slice() {
        [k, name] if k.kind == TokenKind::Word && k.text == keyword && name.kind == TokenKind::Quoted => {
            if name.text.contains(['\n', '\r']) || name.text.is_empty() {
                return Err(ParseError::new(
                    "E_BAD_VALUE",
                    name.span,
                    "name must be non-empty",
                ));
            }
            Ok((name.text.clone(), rest))
        }
        _ => Err(ParseError::new(
            "E_MISSING_HEADER",
            *span,
            format!("document must start with `{keyword} \"<name>\"`"),
        )),
    }
}

pub fn expect_word<'a>(tok: Option<&'a Token>, after: &Token, what: &str) -> Result<&'a Token, ParseError> {
    match tok {
        Some(t) if t.kind == TokenKind::Word => Ok(t),
        Some(t) => Err(ParseError::new(
            "E_SYNTAX",
            t.span,
            format!("expected {what}, found {t}"),
        )),
        None => Err(ParseError::new(
            "E_SYNTAX",
            after.span,
            format!("expected {what} after `{after}`"),
        )),
    }
}

pub fn expect_end(rest: &[Token]) -> Result<(), ParseError> {
    match rest.first() {
        None => Ok(()),
        Some(t) => Err(ParseError::new("E_SYNTAX", t.span, format!("unexpected `{t}`"))),
    }
}
