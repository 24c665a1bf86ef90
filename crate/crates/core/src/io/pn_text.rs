//! Net text format and the PNML subset.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::pn::{Arc, ContactRule, Net, Place, Transition};

use super::lex::{lines, Cursor, Diagnostics, ParseError, SourceSpan};

fn place_line(c: &mut Cursor, net: &mut Net) -> Result<String, ParseError> {
    let id = c.ident("a place id")?;
    let mut capacity = None;
    let mut tokens = 0;
    loop {
        if c.eat_kw("cap") {
            capacity = Some(small(c, "a capacity")?);
        } else if c.eat_kw("tokens") {
            tokens = small(c, "a token count")?;
        } else {
            break;
        }
    }
    if tokens > 0 {
        net.initial.insert(id.clone(), tokens);
    }
    net.places.push(Place {
        id: id.clone(),
        capacity,
    });
    Ok(id)
}

fn small(c: &mut Cursor, what: &str) -> Result<u32, ParseError> {
    let n = c.uint(what)?;
    u32::try_from(n).map_err(|_| c.error_from(c.pos() - 1, format!("{what} too large")))
}

fn trans_line(c: &mut Cursor, net: &mut Net) -> Result<String, ParseError> {
    let mut t = Transition::new(c.ident("a transition id")?);
    loop {
        if c.eat_kw("delay") {
            t.delay = Some(c.uint("a delay in seconds")?);
        } else if c.eat_kw("external") {
            t.external = true;
        } else if c.eat_kw("label") {
            t.label = Some(c.ident("a label")?);
        } else {
            break;
        }
    }
    let id = t.id.clone();
    net.transitions.push(t);
    Ok(id)
}

fn arc_line(c: &mut Cursor, net: &mut Net) -> Result<(), ParseError> {
    let from = c.ident("a place or transition id")?;
    c.expect_sym("->")?;
    let to = c.ident("a place or transition id")?;
    let weight = if c.eat_kw("weight") {
        small(c, "a weight")?
    } else {
        1
    };
    net.arcs.push(Arc { from, to, weight });
    Ok(())
}

/// Parses the net text format. Bipartiteness and dangling arcs are left to
/// validation; duplicate ids are reported here.
pub fn parse_pn(text: &str) -> Result<Net, Diagnostics> {
    let (cursors, mut errors) = lines(text);
    let mut net = Net::default();
    let mut ids = HashSet::new();
    for mut c in cursors {
        let span = c.span();
        let res = (|| {
            let kw = c.ident("`place`, `trans`, `arc` or `contact`")?;
            let declared = match kw.as_str() {
                "place" => Some(place_line(&mut c, &mut net)?),
                "trans" => Some(trans_line(&mut c, &mut net)?),
                "arc" => {
                    arc_line(&mut c, &mut net)?;
                    None
                }
                "contact" => {
                    net.contact = if c.eat_kw("on") {
                        ContactRule::On
                    } else if c.eat_kw("off") {
                        ContactRule::Off
                    } else {
                        c.expect_kw("auto")?;
                        ContactRule::Auto
                    };
                    None
                }
                other => return Err(c.error_from(0, format!("unknown declaration `{other}`"))),
            };
            c.end()?;
            Ok(declared)
        })();
        match res {
            Ok(Some(id)) if !ids.insert(id.clone()) => errors.push(ParseError {
                span,
                message: format!("duplicate id `{id}`"),
            }),
            Ok(_) => {}
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        Ok(net)
    } else {
        errors.sort_by_key(|e| (e.span.line, e.span.start));
        Err(Diagnostics(errors))
    }
}

pub fn print_pn(net: &Net) -> String {
    let mut out = String::new();
    match net.contact {
        ContactRule::Auto => {}
        ContactRule::On => out.push_str("contact on\n"),
        ContactRule::Off => out.push_str("contact off\n"),
    }
    for p in &net.places {
        let _ = write!(out, "place {}", p.id);
        if let Some(cap) = p.capacity {
            let _ = write!(out, " cap {cap}");
        }
        match net.initial.get(&p.id) {
            Some(&n) if n > 0 => {
                let _ = write!(out, " tokens {n}");
            }
            _ => {}
        }
        out.push('\n');
    }
    for t in &net.transitions {
        let _ = write!(out, "trans {}", t.id);
        if let Some(d) = t.delay {
            let _ = write!(out, " delay {d}");
        }
        if t.external {
            out.push_str(" external");
        }
        if let Some(l) = &t.label {
            let _ = write!(out, " label {l}");
        }
        out.push('\n');
    }
    for a in &net.arcs {
        let _ = write!(out, "arc {} -> {}", a.from, a.to);
        if a.weight != 1 {
            let _ = write!(out, " weight {}", a.weight);
        }
        out.push('\n');
    }
    out
}

fn span_of(doc: &roxmltree::Document, node: roxmltree::Node) -> SourceSpan {
    let pos = doc.text_pos_at(node.range().start);
    SourceSpan {
        file: None,
        line: pos.row as usize,
        start: pos.col as usize,
        end: pos.col as usize + node.tag_name().name().len() + 1,
    }
}

fn err(doc: &roxmltree::Document, node: roxmltree::Node, message: impl Into<String>) -> ParseError {
    ParseError {
        span: span_of(doc, node),
        message: message.into(),
    }
}

fn unsupported(doc: &roxmltree::Document, node: roxmltree::Node) -> ParseError {
    err(
        doc,
        node,
        format!("unsupported feature `{}`", node.tag_name().name()),
    )
}

fn attr(
    doc: &roxmltree::Document,
    node: roxmltree::Node,
    name: &str,
) -> Result<String, ParseError> {
    node.attribute(name).map(str::to_string).ok_or_else(|| {
        err(
            doc,
            node,
            format!("`{}` lacks attribute `{name}`", node.tag_name().name()),
        )
    })
}

/// Number in a `<text>` child, for markings, inscriptions and capacities.
fn number(doc: &roxmltree::Document, node: roxmltree::Node) -> Result<u32, ParseError> {
    let text = node
        .children()
        .find(|n| n.has_tag_name("text"))
        .and_then(|t| t.text())
        .ok_or_else(|| {
            err(
                doc,
                node,
                format!("`{}` lacks a `text` value", node.tag_name().name()),
            )
        })?;
    text.trim()
        .parse()
        .map_err(|_| err(doc, node, format!("`{}` is not a token count", text.trim())))
}

const IGNORED: [&str; 3] = ["name", "graphics", "toolspecific"];

fn children<'a, 'i>(
    node: roxmltree::Node<'a, 'i>,
) -> impl Iterator<Item = roxmltree::Node<'a, 'i>> {
    node.children().filter(|n| n.is_element())
}

fn walk(doc: &roxmltree::Document, node: roxmltree::Node, net: &mut Net) -> Result<(), ParseError> {
    for child in children(node) {
        match child.tag_name().name() {
            "page" => walk(doc, child, net)?,
            "place" => {
                let id = attr(doc, child, "id")?;
                let mut capacity = None;
                for part in children(child) {
                    match part.tag_name().name() {
                        "initialMarking" => {
                            let n = number(doc, part)?;
                            if n > 0 {
                                net.initial.insert(id.clone(), n);
                            }
                        }
                        "capacity" => capacity = Some(number(doc, part)?),
                        n if IGNORED.contains(&n) => {}
                        _ => return Err(unsupported(doc, part)),
                    }
                }
                net.places.push(Place { id, capacity });
            }
            "transition" => {
                let id = attr(doc, child, "id")?;
                if let Some(part) =
                    children(child).find(|p| !IGNORED.contains(&p.tag_name().name()))
                {
                    return Err(unsupported(doc, part));
                }
                net.transitions.push(Transition::new(id));
            }
            "arc" => {
                let from = attr(doc, child, "source")?;
                let to = attr(doc, child, "target")?;
                let mut weight = 1;
                for part in children(child) {
                    match part.tag_name().name() {
                        "inscription" => weight = number(doc, part)?,
                        n if IGNORED.contains(&n) => {}
                        _ => return Err(unsupported(doc, part)),
                    }
                }
                net.arcs.push(Arc { from, to, weight });
            }
            n if IGNORED.contains(&n) => {}
            _ => return Err(unsupported(doc, child)),
        }
    }
    Ok(())
}

/// Reads place/transition nets from PNML. Places may carry a `capacity`
/// element with a `text` value; other content is rejected by name.
pub fn parse_pnml(xml: &str) -> Result<Net, ParseError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| {
        let pos = e.pos();
        ParseError {
            span: SourceSpan {
                file: None,
                line: pos.row as usize,
                start: pos.col as usize,
                end: pos.col as usize,
            },
            message: format!("malformed XML: {e}"),
        }
    })?;
    let root = doc.root_element();
    let nets: Vec<roxmltree::Node> = match root.tag_name().name() {
        "net" => vec![root],
        "pnml" => {
            let mut nets = Vec::new();
            for c in children(root) {
                if c.has_tag_name("net") {
                    nets.push(c);
                } else {
                    return Err(unsupported(&doc, c));
                }
            }
            nets
        }
        _ => return Err(unsupported(&doc, root)),
    };
    if nets.len() > 1 {
        return Err(err(&doc, nets[1], "more than one `net`"));
    }
    let mut net = Net::default();
    if let Some(n) = nets.first() {
        walk(&doc, *n, &mut net)?;
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG8: &str = "\
place ready cap 1 tokens 1
place holding cap 1
place dispensing cap 1
trans insert
trans reject
trans accept
trans dispense
arc ready -> insert
arc insert -> holding
arc holding -> reject
arc reject -> ready
arc holding -> accept
arc accept -> dispensing
arc dispensing -> dispense
arc dispense -> ready
";

    #[test]
    fn text_round_trip() {
        let net = parse_pn(FIG8).unwrap();
        assert_eq!(net.class(), crate::pn::NetClass::Elementary);
        assert_eq!(parse_pn(&print_pn(&net)).unwrap(), net);
    }

    #[test]
    fn duplicate_and_syntax_errors() {
        let e = parse_pn("place p\ntrans p\narc p -> \n").unwrap_err();
        assert_eq!(e.0.len(), 2);
        assert!(e.0[0].message.contains("duplicate"));
        assert_eq!(e.0[1].span.line, 3);
    }

    #[test]
    fn empty_pnml_net() {
        assert_eq!(parse_pnml("<net/>").unwrap(), Net::default());
        assert_eq!(
            parse_pnml("<pnml><net id=\"n\"/></pnml>").unwrap(),
            Net::default()
        );
    }

    #[test]
    fn pnml_subset() {
        let xml = r#"<pnml><net id="n" type="ptnet"><page id="pg">
            <place id="p"><name><text>P</text></name><initialMarking><text>2</text></initialMarking></place>
            <transition id="t"/>
            <arc id="a" source="p" target="t"><inscription><text>2</text></inscription></arc>
        </page></net></pnml>"#;
        let net = parse_pnml(xml).unwrap();
        assert_eq!(net.initial_marking().get("p"), 2);
        assert_eq!(net.arcs[0].weight, 2);
    }

    #[test]
    fn colored_tokens_are_unsupported() {
        let xml = r#"<pnml><net id="n"><declaration><structure/></declaration></net></pnml>"#;
        let e = parse_pnml(xml).unwrap_err();
        assert!(
            e.message.contains("unsupported feature `declaration`"),
            "{e}"
        );
        assert!(parse_pnml("<net><place id=\"p\"></net>")
            .unwrap_err()
            .message
            .contains("malformed"));
    }
}
