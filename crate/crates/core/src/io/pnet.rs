//! The `.pnet` text format.
//!
//! ```text
//! net "escrow"
//! place funded tokens=1 legal=power
//! place released
//! transition release actor=Buyer action=release
//! arc funded -> release
//! arc release -> released
//! ```
//!
//! Directives are `net`, `place`, `transition` and `arc`, one per line;
//! `#` starts a comment. Arcs are `a -> b` (direction follows the kinds of
//! `a` and `b`), `p <-> t` (bidirectional) and `p -o t` (inhibitor).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::net::{is_identifier, Arc, LegalKind, PetriNet, Place, Transition};

use super::lex::{expect_end, expect_word, header, quote, tokenize, ParseError, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Place,
    Transition,
}

/// Parses a `.pnet` document.
pub fn parse_net(text: &str) -> Result<PetriNet, ParseError> {
    let lines = tokenize(text)?;
    let (name, body) = header(&lines, "net")?;

    let mut places = Vec::new();
    let mut transitions = Vec::new();
    let mut kinds: BTreeMap<String, Kind> = BTreeMap::new();
    let mut arcs: Vec<(&Token, &str, &Token)> = Vec::new();

    for (_, toks) in body {
        let (directive, rest) = toks.split_first().expect("tokenize drops empty lines");
        match directive.text.as_str() {
            "place" => {
                let id = identifier(rest.first(), directive, "a place id")?;
                declare(&mut kinds, id, Kind::Place)?;
                places.push(parse_place(id, &rest[1..])?);
            }
            "transition" => {
                let id = identifier(rest.first(), directive, "a transition id")?;
                declare(&mut kinds, id, Kind::Transition)?;
                transitions.push(parse_transition(id, directive, &rest[1..])?);
            }
            "arc" => {
                let from = identifier(rest.first(), directive, "an arc source")?;
                let op = expect_word(rest.get(1), from, "`->`, `<->` or `-o`")?;
                if !matches!(op.text.as_str(), "->" | "<->" | "-o") {
                    return Err(ParseError::new(
                        "E_SYNTAX",
                        op.span,
                        format!("expected `->`, `<->` or `-o`, found `{op}`"),
                    ));
                }
                let to = identifier(rest.get(2), op, "an arc target")?;
                expect_end(&rest[3..])?;
                arcs.push((from, op.text.as_str(), to));
            }
            "net" => {
                return Err(ParseError::new(
                    "E_DUP_HEADER",
                    directive.span,
                    "a document describes exactly one net",
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

    let kind_of = |tok: &Token| {
        kinds.get(&tok.text).copied().ok_or_else(|| {
            ParseError::new(
                "E_ARC_UNKNOWN",
                tok.span,
                format!("`{}` is neither a place nor a transition", tok.text),
            )
        })
    };
    let mut resolved = Vec::with_capacity(arcs.len());
    for (from, op, to) in arcs {
        let kinds = (kind_of(from)?, kind_of(to)?);
        let arc = match (op, kinds) {
            ("->", (Kind::Place, Kind::Transition)) => Arc::input(&from.text, &to.text),
            ("->", (Kind::Transition, Kind::Place)) => Arc::output(&from.text, &to.text),
            ("<->", (Kind::Place, Kind::Transition)) => Arc::bidirectional(&from.text, &to.text),
            ("-o", (Kind::Place, Kind::Transition)) => Arc::inhibitor(&from.text, &to.text),
            _ => {
                let need = if op == "->" {
                    "a place and a transition"
                } else {
                    "a place followed by a transition"
                };
                return Err(ParseError::new(
                    "E_ARC_ENDPOINTS",
                    from.span,
                    format!("`arc {} {op} {}` must connect {need}", from.text, to.text),
                ));
            }
        };
        resolved.push(arc);
    }
    Ok(PetriNet::new(name, places, transitions, resolved))
}

fn identifier<'a>(tok: Option<&'a Token>, after: &Token, what: &str) -> Result<&'a Token, ParseError> {
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

fn declare(kinds: &mut BTreeMap<String, Kind>, id: &Token, kind: Kind) -> Result<(), ParseError> {
    if kinds.insert(id.text.clone(), kind).is_some() {
        return Err(ParseError::new(
            "E_DUP_ID",
            id.span,
            format!("`{}` is declared twice", id.text),
        ));
    }
    Ok(())
}

/// A parsed attribute: its token, key and value (`None` for a bare flag).
type Attribute<'a> = (&'a Token, &'a str, Option<&'a str>);

/// Splits `key=value` attributes and bare flags, rejecting repeats.
fn attributes(rest: &[Token]) -> Result<Vec<Attribute<'_>>, ParseError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for t in rest {
        let (key, value) = match t.text.split_once('=') {
            Some((k, v)) => (k, Some(v)),
            None => (t.text.as_str(), None),
        };
        if t.kind != super::lex::TokenKind::Word {
            return Err(ParseError::new("E_SYNTAX", t.span, format!("unexpected {t}")));
        }
        if !seen.insert(key) {
            return Err(ParseError::new(
                "E_DUP_KEY",
                t.span,
                format!("`{key}` is given twice"),
            ));
        }
        out.push((t, key, value));
    }
    Ok(out)
}

fn unknown_key(t: &Token, key: &str, allowed: &str) -> ParseError {
    ParseError::new(
        "E_UNKNOWN_KEY",
        t.span,
        format!("unknown attribute `{key}` (expected {allowed})"),
    )
}

fn bad_value(t: &Token, message: String) -> ParseError {
    ParseError::new("E_BAD_VALUE", t.span, message)
}

fn parse_place(id: &Token, rest: &[Token]) -> Result<Place, ParseError> {
    let mut place = Place::new(id.text.as_str(), 0);
    for (t, key, value) in attributes(rest)? {
        match (key, value) {
            ("tokens", Some(v)) => {
                place.initial_tokens = v
                    .parse()
                    .ok()
                    .filter(|_| v.bytes().all(|b| b.is_ascii_digit()))
                    .ok_or_else(|| bad_value(t, format!("`{v}` is not a token count")))?;
            }
            ("legal", Some("power")) => place.legal = LegalKind::Power,
            ("legal", Some("obligation")) => place.legal = LegalKind::Obligation,
            ("legal", Some(v)) => {
                return Err(bad_value(
                    t,
                    format!("legal kind must be power or obligation, not `{v}`"),
                ))
            }
            ("lcp", None) => place.lcp = true,
            ("tokens" | "legal", None) | ("lcp", Some(_)) => {
                return Err(bad_value(t, format!("malformed attribute `{}`", t.text)))
            }
            _ => return Err(unknown_key(t, key, "tokens=, legal= or lcp")),
        }
    }
    Ok(place)
}

fn parse_transition(id: &Token, directive: &Token, rest: &[Token]) -> Result<Transition, ParseError> {
    let (mut actor, mut action, mut temporal) = (None, None, false);
    for (t, key, value) in attributes(rest)? {
        match (key, value) {
            ("actor" | "action", Some(v)) if !is_identifier(v) => {
                return Err(bad_value(t, format!("`{v}` is not a valid identifier")))
            }
            ("actor", Some(v)) => actor = Some(v),
            ("action", Some(v)) => action = Some(v),
            ("temporal", None) => temporal = true,
            ("actor" | "action", None) | ("temporal", Some(_)) => {
                return Err(bad_value(t, format!("malformed attribute `{}`", t.text)))
            }
            _ => return Err(unknown_key(t, key, "actor=, action= or temporal")),
        }
    }
    let (Some(actor), Some(action)) = (actor, action) else {
        return Err(ParseError::new(
            "E_MISSING_KEY",
            directive.span,
            format!("transition `{}` needs both actor= and action=", id.text),
        ));
    };
    let t = Transition::new(id.text.as_str(), actor, action);
    Ok(if temporal { t.temporal() } else { t })
}

/// Renders `net` in canonical form: places, transitions, then arcs, each
/// sorted, with LF line endings.
pub fn serialize_net(net: &PetriNet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "net {}", quote(net.name()));
    if !net.places().is_empty() {
        out.push('\n');
    }
    for p in net.places() {
        let _ = write!(out, "place {}", p.id);
        if p.initial_tokens > 0 {
            let _ = write!(out, " tokens={}", p.initial_tokens);
        }
        if p.legal.is_legal() {
            let _ = write!(out, " legal={}", p.legal.as_str());
        }
        if p.lcp {
            out.push_str(" lcp");
        }
        out.push('\n');
    }
    if !net.transitions().is_empty() {
        out.push('\n');
    }
    for t in net.transitions() {
        let _ = write!(
            out,
            "transition {} actor={} action={}",
            t.id, t.label.actor, t.label.action
        );
        if t.temporal {
            out.push_str(" temporal");
        }
        out.push('\n');
    }
    if !net.arcs().is_empty() {
        out.push('\n');
    }
    for a in net.arcs() {
        let _ = match a {
            Arc::Normal { from, to } => writeln!(out, "arc {from} -> {to}"),
            Arc::Bidirectional { place, transition } => writeln!(out, "arc {place} <-> {transition}"),
            Arc::Inhibitor { place, transition } => writeln!(out, "arc {place} -o {transition}"),
        };
    }
    out
}
