//! The `.align` text format.
//!
//! ```text
//! align "escrow-impl"
//! event Buyer:releaseFunds => Buyer:release
//! irrelevant Admin:setFee
//! legal c_funded => funded
//! illegal-seq Buyer:release Seller:refund
//! ```

use std::fmt::Write as _;

use crate::align::EventAlignment;
use crate::net::{is_identifier, EventLabel, PlaceId};

use super::lex::{expect_end, expect_word, header, quote, tokenize, ParseError, Token};

/// Parses an `.align` document. Whether the labels and places it names exist
/// is checked separately by [`crate::align::validate_alignment`].
pub fn parse_alignment(text: &str) -> Result<EventAlignment, ParseError> {
    let lines = tokenize(text)?;
    let (name, body) = header(&lines, "align")?;
    let mut align = EventAlignment {
        name,
        ..EventAlignment::default()
    };

    for (_, toks) in body {
        let (directive, rest) = toks.split_first().expect("tokenize drops empty lines");
        match directive.text.as_str() {
            "event" => {
                let from = expect_word(rest.first(), directive, "a candidate event")?;
                let c = label(from)?;
                arrow(rest.get(1), from)?;
                let g = label(expect_word(rest.get(2), &rest[1], "a ground event")?)?;
                expect_end(&rest[3..])?;
                if align.event_map.insert(c, g).is_some() {
                    return Err(duplicate(from));
                }
            }
            "irrelevant" => {
                let tok = expect_word(rest.first(), directive, "a candidate event")?;
                expect_end(&rest[1..])?;
                if !align.irrelevant.insert(label(tok)?) {
                    return Err(duplicate(tok));
                }
            }
            "legal" => {
                let from = place(rest.first(), directive, "a candidate place")?;
                arrow(rest.get(1), from)?;
                let to = place(rest.get(2), &rest[1], "a ground place")?;
                expect_end(&rest[3..])?;
                let (c, g) = (PlaceId::new(&from.text), PlaceId::new(&to.text));
                if align.legal_map.insert(c, g).is_some() {
                    return Err(duplicate(from));
                }
            }
            "illegal-seq" => {
                if rest.is_empty() {
                    return Err(ParseError::new(
                        "E_SYNTAX",
                        directive.span,
                        "illegal-seq needs at least one event",
                    ));
                }
                let seq = rest
                    .iter()
                    .map(|t| expect_word(Some(t), directive, "a ground event").and_then(label))
                    .collect::<Result<Vec<_>, _>>()?;
                align.illegal_sequences.push(seq);
            }
            "align" => {
                return Err(ParseError::new(
                    "E_DUP_HEADER",
                    directive.span,
                    "a document describes exactly one alignment",
                ))
            }
            other => {
                return Err(ParseError::new(
                    "E_UNKNOWN_DIRECTIVE",
                    directive.span,
                    format!("unknown directive `{other}`"),
                ))
            }
        }
    }
    Ok(align)
}

fn label(tok: &Token) -> Result<EventLabel, ParseError> {
    tok.text
        .parse()
        .map_err(|e: crate::net::LabelParseError| ParseError::new("E_BAD_LABEL", tok.span, e.to_string()))
}

fn place<'a>(tok: Option<&'a Token>, after: &Token, what: &str) -> Result<&'a Token, ParseError> {
    let t = expect_word(tok, after, what)?;
    if !is_identifier(&t.text) {
        return Err(ParseError::new(
            "E_BAD_ID",
            t.span,
            format!("`{}` is not a valid identifier", t.text),
        ));
    }
    Ok(t)
}

fn arrow(tok: Option<&Token>, after: &Token) -> Result<(), ParseError> {
    let t = expect_word(tok, after, "`=>`")?;
    if t.text != "=>" {
        return Err(ParseError::new(
            "E_SYNTAX",
            t.span,
            format!("expected `=>`, found `{t}`"),
        ));
    }
    Ok(())
}

fn duplicate(tok: &Token) -> ParseError {
    ParseError::new("E_DUP_ID", tok.span, format!("`{}` is mapped twice", tok.text))
}

/// Renders an alignment in canonical form. Illegal sequences keep their
/// order; everything else is sorted.
pub fn serialize_alignment(align: &EventAlignment) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "align {}", quote(&align.name));
    if !align.event_map.is_empty() || !align.irrelevant.is_empty() {
        out.push('\n');
    }
    for (c, g) in &align.event_map {
        let _ = writeln!(out, "event {c} => {g}");
    }
    for c in &align.irrelevant {
        let _ = writeln!(out, "irrelevant {c}");
    }
    if !align.legal_map.is_empty() {
        out.push('\n');
    }
    for (c, g) in &align.legal_map {
        let _ = writeln!(out, "legal {c} => {g}");
    }
    if !align.illegal_sequences.is_empty() {
        out.push('\n');
    }
    for seq in &align.illegal_sequences {
        out.push_str("illegal-seq");
        for l in seq {
            let _ = write!(out, " {l}");
        }
        out.push('\n');
    }
    out
}
