//! Read-only import of plain place/transition PNML.
//!
//! Only uncoloured nets with unit arcs are accepted. Everything the `.pnet`
//! format carries beyond structure is optional:
//!
//! * a transition's `<name>` of the form `actor:action` becomes its label,
//!   otherwise the label is `Unknown:<id>`;
//! * `<arc><type value="inhibitor"/></arc>` (the usual tool extension, also
//!   accepted inside `<toolspecific>`) makes an inhibitor arc, and `read` or
//!   `test` makes a bidirectional one;
//! * `<toolspecific tool="contractcheck">` may hold `<legal value="power"/>`
//!   on a place and `<temporal/>` on a transition.

use std::collections::BTreeSet;

use roxmltree::{Document, Node};

use crate::diag::Span;
use crate::net::{is_identifier, Arc, EventLabel, LegalKind, PetriNet, Place, Transition};

use super::lex::ParseError;

pub const TOOL_NAME: &str = "contractcheck";

/// Parses the single `<net>` of a PNML document.
pub fn parse_pnml(text: &str) -> Result<PetriNet, ParseError> {
    let doc = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        ParseError::new(
            "E_XML",
            Span {
                line: pos.row as usize,
                column: pos.col as usize,
            },
            e.to_string(),
        )
    })?;
    let span = |n: Node| {
        let pos = doc.text_pos_at(n.range().start);
        Span {
            line: pos.row as usize,
            column: pos.col as usize,
        }
    };
    let root = doc.root_element();
    let nets: Vec<Node> = root.descendants().filter(|n| n.has_tag_name("net")).collect();
    let net = match nets.as_slice() {
        [net] => *net,
        [] => {
            return Err(ParseError::new(
                "E_PNML_STRUCTURE",
                span(root),
                "the document has no <net> element",
            ))
        }
        [_, second, ..] => {
            return Err(ParseError::new(
                "E_PNML_STRUCTURE",
                span(*second),
                "only single-net documents can be imported",
            ))
        }
    };
    let name = name_text(net)
        .or_else(|| net.attribute("id").map(str::to_string))
        .unwrap_or_else(|| "pnml".into());

    let id_of = |n: Node| -> Result<String, ParseError> {
        let id = n.attribute("id").ok_or_else(|| {
            ParseError::new(
                "E_MISSING_KEY",
                span(n),
                format!("<{}> without an id", n.tag_name().name()),
            )
        })?;
        if !is_identifier(id) {
            return Err(ParseError::new(
                "E_BAD_ID",
                span(n),
                format!("`{id}` is not a valid identifier"),
            ));
        }
        Ok(id.to_string())
    };

    let mut seen = BTreeSet::new();
    let mut places = Vec::new();
    let mut transitions = Vec::new();
    let mut arcs = Vec::new();
    for node in net.descendants().filter(Node::is_element) {
        match node.tag_name().name() {
            "place" => {
                let id = id_of(node)?;
                if !seen.insert(id.clone()) {
                    return Err(ParseError::new(
                        "E_DUP_ID",
                        span(node),
                        format!("`{id}` is defined twice"),
                    ));
                }
                let tokens = match child(node, "initialMarking").and_then(text_of) {
                    None => 0,
                    Some(t) => t.trim().parse::<u64>().map_err(|_| {
                        ParseError::new(
                            "E_BAD_VALUE",
                            span(node),
                            format!("initial marking `{}` of `{id}` is not a token count", t.trim()),
                        )
                    })?,
                };
                let mut place = Place::new(id.as_str(), tokens);
                if let Some(legal) = ours(node).and_then(|t| child(t, "legal")) {
                    place = place.legal(match legal.attribute("value") {
                        Some("power") => LegalKind::Power,
                        Some("obligation") => LegalKind::Obligation,
                        other => {
                            return Err(ParseError::new(
                                "E_BAD_VALUE",
                                span(legal),
                                format!(
                                    "legal kind `{}` is not power or obligation",
                                    other.unwrap_or_default()
                                ),
                            ))
                        }
                    });
                }
                places.push(place);
            }
            "transition" => {
                let id = id_of(node)?;
                if !seen.insert(id.clone()) {
                    return Err(ParseError::new(
                        "E_DUP_ID",
                        span(node),
                        format!("`{id}` is defined twice"),
                    ));
                }
                let label = name_text(node)
                    .and_then(|n| n.trim().parse::<EventLabel>().ok())
                    .unwrap_or_else(|| EventLabel::new("Unknown", &id));
                let mut t = Transition::new(id.as_str(), &label.actor, &label.action);
                if ours(node).and_then(|n| child(n, "temporal")).is_some() {
                    t = t.temporal();
                }
                transitions.push(t);
            }
            "arc" => {
                let (Some(source), Some(target)) = (node.attribute("source"), node.attribute("target"))
                else {
                    return Err(ParseError::new(
                        "E_ARC_ENDPOINTS",
                        span(node),
                        "arc needs source and target",
                    ));
                };
                if let Some(w) = child(node, "inscription").and_then(text_of) {
                    if w.trim() != "1" {
                        return Err(ParseError::new(
                            "E_UNSUPPORTED",
                            span(node),
                            format!(
                                "arc {source} -> {target} has weight `{}`; only unit arcs are supported",
                                w.trim()
                            ),
                        ));
                    }
                }
                let kind = node
                    .descendants()
                    .find(|n| n.has_tag_name("type") || n.has_tag_name("arcType"))
                    .and_then(|n| n.attribute("value").map(str::to_string).or_else(|| text_of(n)))
                    .unwrap_or_else(|| "normal".into());
                arcs.push(match kind.trim() {
                    "normal" | "regular" => Arc::Normal {
                        from: source.into(),
                        to: target.into(),
                    },
                    "inhibitor" => Arc::inhibitor(source, target),
                    "read" | "test" => Arc::bidirectional(source, target),
                    other => {
                        return Err(ParseError::new(
                            "E_UNSUPPORTED",
                            span(node),
                            format!("arc type `{other}` is not supported"),
                        ))
                    }
                });
            }
            _ => {}
        }
    }
    Ok(PetriNet::new(name, places, transitions, arcs))
}

fn child<'a, 'i>(n: Node<'a, 'i>, tag: &str) -> Option<Node<'a, 'i>> {
    n.children().find(|c| c.has_tag_name(tag))
}

/// Text of the `<text>` child, the PNML convention for labels.
fn text_of(n: Node) -> Option<String> {
    child(n, "text").and_then(|t| t.text()).map(str::to_string)
}

fn name_text(n: Node) -> Option<String> {
    child(n, "name").and_then(text_of)
}

/// This tool's `<toolspecific>` block, if any.
fn ours<'a, 'i>(n: Node<'a, 'i>) -> Option<Node<'a, 'i>> {
    n.children()
        .find(|c| c.has_tag_name("toolspecific") && c.attribute("tool") == Some(TOOL_NAME))
}
