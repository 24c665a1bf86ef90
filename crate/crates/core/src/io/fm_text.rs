//! Line-oriented text format for FM models with their events and control.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use crate::events::{ControlEdge, ControlGraph, Event, EventError, EventSet};
use crate::fm::guard::Expr;
use crate::fm::model::*;

use super::expr::parse_expr;
use super::lex::{lines, Cursor, Diagnostics, ParseError, SourceSpan, Tok};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FmDocument {
    pub model: FmModel,
    pub events: EventSet,
    pub control: Option<ControlGraph>,
}

pub(crate) fn stage_ref(c: &mut Cursor) -> Result<StageRef, ParseError> {
    let m = c.ident("a machine id")?;
    c.expect_sym(".")?;
    let s = c.ident("a stage")?;
    let stage = Stage::parse(&s)
        .ok_or_else(|| c.error_from(c.pos() - 1, format!("unknown stage `{s}`")))?;
    Ok(StageRef::new(m, stage))
}

pub(crate) fn position(c: &mut Cursor) -> Result<(String, Position), ParseError> {
    let m = c.ident("a machine id")?;
    c.expect_sym(".")?;
    let s = c.ident("a stage or `storage`")?;
    if s == "storage" {
        return Ok((m, Position::Storage));
    }
    let stage = Stage::parse(&s)
        .ok_or_else(|| c.error_from(c.pos() - 1, format!("unknown stage `{s}`")))?;
    Ok((m, Position::Stage(stage)))
}

fn path(c: &mut Cursor) -> Result<String, ParseError> {
    let mut p = c.ident("a sphere name")?;
    while c.eat_sym("/") {
        p.push('/');
        p.push_str(&c.ident("a sphere name")?);
    }
    Ok(p)
}

/// `id` or `id.part`.
fn element(c: &mut Cursor) -> Result<String, ParseError> {
    let mut e = c.ident("an element id")?;
    if c.eat_sym(".") {
        e.push('.');
        e.push_str(&c.ident("a stage")?);
    }
    Ok(e)
}

pub(crate) fn value(c: &mut Cursor) -> Result<Value, ParseError> {
    match c.peek() {
        Some(Tok::Str(_)) => Ok(Value::Str(c.string("a string")?)),
        _ => Ok(Value::Int(c.int("a number or string")?)),
    }
}

/// `{k: v, ...}`; an absent block is empty.
pub(crate) fn attrs(c: &mut Cursor) -> Result<Attrs, ParseError> {
    let mut out = Attrs::new();
    if !c.eat_sym("{") {
        return Ok(out);
    }
    if c.eat_sym("}") {
        return Ok(out);
    }
    loop {
        let k = c.ident("an attribute name")?;
        c.expect_sym(":")?;
        out.insert(k, value(c)?);
        if c.eat_sym("}") {
            return Ok(out);
        }
        c.expect_sym(",")?;
    }
}

fn attr_exprs(c: &mut Cursor) -> Result<Vec<(String, Expr)>, ParseError> {
    let mut out = Vec::new();
    if !c.eat_sym("{") || c.eat_sym("}") {
        return Ok(out);
    }
    loop {
        let k = c.ident("an attribute name")?;
        c.expect_sym(":")?;
        out.push((k, parse_expr(c)?));
        if c.eat_sym("}") {
            return Ok(out);
        }
        c.expect_sym(",")?;
    }
}

fn opt_id(c: &mut Cursor) -> Result<Option<String>, ParseError> {
    if c.eat_kw("as") {
        Ok(Some(c.ident("an id")?))
    } else {
        Ok(None)
    }
}

fn opt_guard(c: &mut Cursor) -> Result<Option<Expr>, ParseError> {
    if c.eat_kw("if") {
        Ok(Some(parse_expr(c)?))
    } else {
        Ok(None)
    }
}

#[derive(Default)]
struct Parser {
    doc: FmModel,
    ids: HashSet<String>,
    errors: Vec<ParseError>,
    events: Vec<(Event, SourceSpan)>,
    start: Option<(String, SourceSpan)>,
    edges: Vec<(ControlEdge, SourceSpan)>,
}

impl Parser {
    fn claim(&mut self, id: &str, span: &SourceSpan) {
        if !self.ids.insert(id.to_string()) {
            self.errors.push(ParseError {
                span: span.clone(),
                message: format!("duplicate id `{id}`"),
            });
        }
    }

    fn fresh(&self, prefix: &str, n: usize) -> String {
        let mut i = n + 1;
        loop {
            let id = format!("{prefix}{i}");
            if !self.ids.contains(&id) {
                return id;
            }
            i += 1;
        }
    }

    fn line(&mut self, c: &mut Cursor) -> Result<(), ParseError> {
        let head_span = c.span();
        let kw = c.ident("a declaration keyword")?;
        match kw.as_str() {
            "sphere" => {
                let p = path(c)?;
                if self.doc.spheres.contains(&p) {
                    return Err(c.error_from(1, format!("duplicate sphere `{p}`")));
                }
                self.doc.spheres.push(p);
            }
            "machine" => {
                let id = c.ident("a machine id")?;
                c.expect_kw("in")?;
                let sphere = path(c)?;
                c.expect_kw("kind")?;
                let thing_kind = if c.eat_sym("*") {
                    "*".to_string()
                } else {
                    c.ident("a thing kind")?
                };
                c.expect_kw("stages")?;
                let mut stages = Vec::new();
                loop {
                    let s = c.ident("a stage")?;
                    let st = Stage::parse(&s)
                        .ok_or_else(|| c.error_from(c.pos() - 1, format!("unknown stage `{s}`")))?;
                    stages.push(st);
                    if !c.eat_sym(",") {
                        break;
                    }
                }
                let has_storage = c.eat_kw("storage");
                let initial_power = if c.eat_kw("power") {
                    if c.eat_kw("on") {
                        Power::On
                    } else {
                        c.expect_kw("off")?;
                        Power::Off
                    }
                } else {
                    Power::On
                };
                self.claim(&id, &head_span);
                self.doc.machines.push(Machine {
                    id,
                    sphere,
                    thing_kind,
                    stages,
                    has_storage,
                    initial_power,
                });
            }
            "clock" => {
                let id = c.ident("a clock id")?;
                let sphere = if c.eat_kw("in") { Some(path(c)?) } else { None };
                self.claim(&id, &head_span);
                self.doc.clocks.push(Clock { id, sphere });
            }
            "flow" => {
                let from = stage_ref(c)?;
                c.expect_sym("->")?;
                let to = stage_ref(c)?;
                let id = opt_id(c)?.unwrap_or_else(|| self.fresh("f", self.doc.flows.len()));
                let label = if c.eat_kw("label") {
                    Some(c.string("a label")?)
                } else {
                    None
                };
                self.claim(&id, &head_span);
                self.doc.flows.push(FlowArc {
                    id,
                    from,
                    to,
                    label,
                });
            }
            "park" => {
                let from = stage_ref(c)?;
                let id = opt_id(c)?.unwrap_or_else(|| self.fresh("k", self.doc.parks.len()));
                self.claim(&id, &head_span);
                self.doc.parks.push(Park { id, from });
            }
            "unpark" => {
                let m = c.ident("a machine id")?;
                c.expect_sym("->")?;
                let s = c.ident("a stage")?;
                let stage = Stage::parse(&s)
                    .ok_or_else(|| c.error_from(c.pos() - 1, format!("unknown stage `{s}`")))?;
                let id = opt_id(c)?.unwrap_or_else(|| self.fresh("u", self.doc.unparks.len()));
                self.claim(&id, &head_span);
                self.doc.unparks.push(Unpark {
                    id,
                    to: StageRef::new(m, stage),
                });
            }
            "trigger" => {
                let a = c.ident("a machine or clock id")?;
                let from = if c.eat_sym(".") {
                    let s = c.ident("a stage or `timeout`")?;
                    if s == "timeout" {
                        TriggerSource::Timeout(a)
                    } else {
                        let stage = Stage::parse(&s).ok_or_else(|| {
                            c.error_from(c.pos() - 1, format!("unknown stage `{s}`"))
                        })?;
                        TriggerSource::Stage(StageRef::new(a, stage))
                    }
                } else {
                    TriggerSource::Machine(a)
                };
                c.expect_sym("=>")?;
                let to = target(c)?;
                let id = opt_id(c)?.unwrap_or_else(|| self.fresh("t", self.doc.triggers.len()));
                let guard = opt_guard(c)?;
                self.claim(&id, &head_span);
                self.doc.triggers.push(TriggerArc {
                    id,
                    from,
                    to,
                    guard,
                });
            }
            "group" => {
                let id = c.ident("a group id")?;
                c.expect_sym("{")?;
                let mut members = Vec::new();
                while !c.eat_sym("}") {
                    let element = c.ident("a flow, park, unpark or trigger id")?;
                    let count = if c.eat_sym("*") {
                        u32::try_from(c.uint("a multiplicity")?)
                            .map_err(|_| c.error("multiplicity too large"))?
                    } else {
                        1
                    };
                    members.push(GroupMember { element, count });
                    if c.eat_sym("}") {
                        break;
                    }
                    c.expect_sym(",")?;
                }
                let gate = if c.eat_kw("on") {
                    if c.eat_kw("timeout") {
                        Some(GroupGate::Timeout(c.ident("a clock id")?))
                    } else {
                        Some(GroupGate::Stage(stage_ref(c)?))
                    }
                } else {
                    None
                };
                let guard = opt_guard(c)?;
                self.claim(&id, &head_span);
                self.doc.groups.push(Group {
                    id,
                    members,
                    gate,
                    guard,
                });
            }
            "link" => {
                let from = c.ident("a machine id")?;
                c.expect_sym("->")?;
                let to = c.ident("a machine id")?;
                let id = opt_id(c)?.unwrap_or_else(|| self.fresh("l", self.doc.links.len()));
                self.claim(&id, &head_span);
                self.doc.links.push(Link { id, from, to });
            }
            "thing" => {
                c.expect_kw("at")?;
                let (machine, position) = position(c)?;
                let attrs = attrs(c)?;
                self.doc.things.push(InitialThing {
                    machine,
                    position,
                    attrs,
                });
            }
            "event" => {
                let id = c.ident("an event id")?;
                c.expect_kw("anchor")?;
                let anchor = element(c)?;
                let mut region = BTreeSet::from([anchor.clone()]);
                if c.eat_kw("region") {
                    c.expect_sym("{")?;
                    if !c.eat_sym("}") {
                        loop {
                            region.insert(element(c)?);
                            if c.eat_sym("}") {
                                break;
                            }
                            c.expect_sym(",")?;
                        }
                    }
                }
                let window = if c.eat_kw("window") {
                    let lo = c.uint("a time")?;
                    c.expect_sym("..")?;
                    Some((lo, c.uint("a time")?))
                } else {
                    None
                };
                self.events.push((
                    Event {
                        id,
                        region,
                        anchor,
                        window,
                    },
                    head_span.clone(),
                ));
            }
            "control" => {
                c.expect_kw("start")?;
                let s = c.ident("an event id")?;
                if self.start.is_some() {
                    return Err(c.error_from(0, "second `control start`"));
                }
                self.start = Some((s, head_span.clone()));
            }
            "edge" => {
                let from = c.ident("an event id")?;
                c.expect_sym("->")?;
                let to = c.ident("an event id")?;
                let guard = opt_guard(c)?;
                self.edges
                    .push((ControlEdge { from, to, guard }, head_span.clone()));
            }
            other => return Err(c.error_from(0, format!("unknown declaration `{other}`"))),
        }
        c.end()
    }

    fn finish(mut self) -> Result<FmDocument, Diagnostics> {
        let index = self.doc.element_index();
        for (e, span) in &self.events {
            for el in &e.region {
                if !index.contains_key(el) {
                    self.errors.push(ParseError {
                        span: span.clone(),
                        message: format!("event `{}` refers to unknown element `{el}`", e.id),
                    });
                }
            }
        }
        let spans: Vec<(String, SourceSpan)> = self
            .events
            .iter()
            .map(|(e, s)| (e.id.clone(), s.clone()))
            .collect();
        let events = match EventSet::new(self.events.into_iter().map(|(e, _)| e).collect()) {
            Ok(ev) => ev,
            Err(err) => {
                let id = match &err {
                    EventError::DuplicateId(id)
                    | EventError::AnchorOutsideRegion(id)
                    | EventError::EmptyWindow(id)
                    | EventError::UnknownEvent(id)
                    | EventError::AnchorCollision(_, id, _) => id,
                };
                let span = spans
                    .iter()
                    .rev()
                    .find(|(e, _)| e == id)
                    .map(|(_, s)| s.clone())
                    .unwrap_or_default();
                self.errors.push(ParseError {
                    span,
                    message: err.to_string(),
                });
                EventSet::default()
            }
        };
        let control = match self.start {
            None => {
                if let Some((_, span)) = self.edges.first() {
                    self.errors.push(ParseError {
                        span: span.clone(),
                        message: "`edge` without `control start`".into(),
                    });
                }
                None
            }
            Some((start, span)) => {
                let mut known: BTreeSet<String> =
                    events.ids().into_iter().map(str::to_string).collect();
                known.insert(start.clone());
                for (e, span) in &self.edges {
                    for end in [&e.from, &e.to] {
                        if !known.contains(end) {
                            self.errors.push(ParseError {
                                span: span.clone(),
                                message: format!("unknown event `{end}`"),
                            });
                        }
                    }
                }
                let edges = self.edges.into_iter().map(|(e, _)| e).collect();
                match ControlGraph::new(&events, edges, start) {
                    Ok(g) => Some(g),
                    Err(err) => {
                        self.errors.push(ParseError {
                            span,
                            message: err.to_string(),
                        });
                        None
                    }
                }
            }
        };
        if self.errors.is_empty() {
            Ok(FmDocument {
                model: self.doc,
                events,
                control,
            })
        } else {
            self.errors.sort_by_key(|e| (e.span.line, e.span.start));
            self.errors.dedup();
            Err(Diagnostics(self.errors))
        }
    }
}

fn target(c: &mut Cursor) -> Result<TriggerTarget, ParseError> {
    let kw = c.ident("`create`, `power`, `clock` or `release`")?;
    Ok(match kw.as_str() {
        "create" => {
            let machine = c.ident("a machine id")?;
            TriggerTarget::Create {
                machine,
                attrs: attr_exprs(c)?,
            }
        }
        "power" => {
            let machine = c.ident("a machine id")?;
            let power = if c.eat_kw("on") {
                Power::On
            } else {
                c.expect_kw("off")?;
                Power::Off
            };
            TriggerTarget::SetPower { machine, power }
        }
        "clock" => {
            let clock = c.ident("a clock id")?;
            if c.eat_kw("start") {
                TriggerTarget::StartClock {
                    clock,
                    duration: c.uint("a duration in seconds")?,
                }
            } else {
                c.expect_kw("stop")?;
                TriggerTarget::StopClock { clock }
            }
        }
        "release" => {
            let machine = c.ident("a machine id")?;
            TriggerTarget::Release {
                machine,
                all: c.eat_kw("all"),
            }
        }
        other => return Err(c.error_from(c.pos() - 1, format!("unknown trigger effect `{other}`"))),
    })
}

/// Parses a model file. Structural rules are left to validation.
pub fn parse_fm(text: &str) -> Result<FmDocument, Diagnostics> {
    let (cursors, mut errors) = lines(text);
    let mut p = Parser::default();
    for mut c in cursors {
        if let Err(e) = p.line(&mut c) {
            errors.push(e);
        }
    }
    p.errors.extend(errors);
    p.finish()
}

fn attrs_text(a: &Attrs) -> String {
    let parts: Vec<String> = a.iter().map(|(k, v)| format!("{k}: {v}")).collect();
    format!("{{{}}}", parts.join(", "))
}

fn target_text(t: &TriggerTarget) -> String {
    match t {
        TriggerTarget::Create { machine, attrs } if attrs.is_empty() => format!("create {machine}"),
        TriggerTarget::Create { machine, attrs } => {
            let parts: Vec<String> = attrs.iter().map(|(k, e)| format!("{k}: {e}")).collect();
            format!("create {machine} {{{}}}", parts.join(", "))
        }
        TriggerTarget::SetPower { machine, power } => format!("power {machine} {power}"),
        TriggerTarget::StartClock { clock, duration } => format!("clock {clock} start {duration}"),
        TriggerTarget::StopClock { clock } => format!("clock {clock} stop"),
        TriggerTarget::Release { machine, all: true } => format!("release {machine} all"),
        TriggerTarget::Release {
            machine,
            all: false,
        } => format!("release {machine}"),
    }
}

/// Serializes a document so that `parse_fm` gives it back unchanged.
pub fn print_fm(doc: &FmDocument) -> String {
    let m = &doc.model;
    let mut out = String::new();
    for s in &m.spheres {
        let _ = writeln!(out, "sphere {s}");
    }
    for mc in &m.machines {
        let stages: Vec<&str> = mc.stages.iter().map(|s| s.name()).collect();
        let _ = write!(
            out,
            "machine {} in {} kind {} stages {}",
            mc.id,
            mc.sphere,
            mc.thing_kind,
            stages.join(",")
        );
        if mc.has_storage {
            out.push_str(" storage");
        }
        if mc.initial_power == Power::Off {
            out.push_str(" power off");
        }
        out.push('\n');
    }
    for c in &m.clocks {
        match &c.sphere {
            Some(s) => writeln!(out, "clock {} in {s}", c.id),
            None => writeln!(out, "clock {}", c.id),
        }
        .expect("write to string");
    }
    for f in &m.flows {
        let _ = write!(out, "flow {} -> {} as {}", f.from, f.to, f.id);
        if let Some(l) = &f.label {
            let _ = write!(out, " label \"{l}\"");
        }
        out.push('\n');
    }
    for p in &m.parks {
        let _ = writeln!(out, "park {} as {}", p.from, p.id);
    }
    for u in &m.unparks {
        let _ = writeln!(out, "unpark {} -> {} as {}", u.to.machine, u.to.stage, u.id);
    }
    for t in &m.triggers {
        let _ = write!(
            out,
            "trigger {} => {} as {}",
            t.from,
            target_text(&t.to),
            t.id
        );
        if let Some(g) = &t.guard {
            let _ = write!(out, " if {g}");
        }
        out.push('\n');
    }
    for g in &m.groups {
        let members: Vec<String> = g
            .members
            .iter()
            .map(|mem| {
                if mem.count == 1 {
                    mem.element.clone()
                } else {
                    format!("{}*{}", mem.element, mem.count)
                }
            })
            .collect();
        let _ = write!(out, "group {} {{{}}}", g.id, members.join(", "));
        match &g.gate {
            Some(GroupGate::Stage(s)) => {
                let _ = write!(out, " on {s}");
            }
            Some(GroupGate::Timeout(c)) => {
                let _ = write!(out, " on timeout {c}");
            }
            None => {}
        }
        if let Some(gd) = &g.guard {
            let _ = write!(out, " if {gd}");
        }
        out.push('\n');
    }
    for l in &m.links {
        let _ = writeln!(out, "link {} -> {} as {}", l.from, l.to, l.id);
    }
    for t in &m.things {
        let pos = match t.position {
            Position::Stage(s) => s.name().to_string(),
            Position::Storage => "storage".to_string(),
        };
        let _ = write!(out, "thing at {}.{pos}", t.machine);
        if !t.attrs.is_empty() {
            let _ = write!(out, " {}", attrs_text(&t.attrs));
        }
        out.push('\n');
    }
    for e in doc.events.iter() {
        let _ = write!(out, "event {} anchor {}", e.id, e.anchor);
        let rest: Vec<&str> = e
            .region
            .iter()
            .filter(|r| **r != e.anchor)
            .map(String::as_str)
            .collect();
        if !rest.is_empty() {
            let _ = write!(out, " region {{{}}}", rest.join(", "));
        }
        if let Some((lo, hi)) = e.window {
            let _ = write!(out, " window {lo}..{hi}");
        }
        out.push('\n');
    }
    if let Some(g) = &doc.control {
        let _ = writeln!(out, "control start {}", g.start);
        for e in &g.edges {
            let _ = write!(out, "edge {} -> {}", e.from, e.to);
            if let Some(gd) = &e.guard {
                let _ = write!(out, " if {gd}");
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_an_empty_model() {
        let doc = parse_fm("# nothing here\n\n").unwrap();
        assert!(doc.model.is_empty());
        assert!(doc.events.is_empty());
        assert!(doc.control.is_none());
    }

    #[test]
    fn syntax_only_for_adjacency() {
        let doc = parse_fm(
            "sphere s\nmachine a in s kind x stages Create,Receive\nflow a.Create -> a.Receive\n",
        )
        .unwrap();
        assert_eq!(doc.model.flows[0].id, "f1");
        assert_eq!(
            crate::fm::validate(&doc.model).rules(),
            vec!["illegal stage adjacency"]
        );
    }

    #[test]
    fn diagnostics_carry_spans() {
        let err = parse_fm("sphere s\nmachine a in s kind x stages Create,Recieve\n").unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!(err.0[0].span.line, 2);
        assert!(err.0[0].message.contains("Recieve"));

        let dup = parse_fm("sphere s\nclock c\nclock c\n").unwrap_err();
        assert_eq!(dup.0[0].span.line, 3);

        let unknown = parse_fm("event E1 anchor nowhere.Receive\n").unwrap_err();
        assert!(unknown.0[0].message.contains("unknown element"));
    }

    #[test]
    fn guards_and_groups_round_trip() {
        let text = "\
sphere s
machine a in s kind coin stages Transfer,Receive,Process storage power off
machine b in s kind * stages Create storage
clock c1 in s
flow a.Transfer -> a.Receive as f1 label \"in\"
flow a.Receive -> a.Process as f2
park a.Process as k1
trigger a.Receive => create b {value: value * 2, tag: \"x\"} as t1 if count(b) < 3 and power(a) = \"on\"
trigger c1.timeout => power a off as t2
trigger a.Process => clock c1 start 60 as t3
group g1 {f1, f2*2, t1} on a.Transfer if not active(c1)
thing at a.storage {value: 5, tag: \"top\"}
event E1 anchor a.Receive region {f1, a.Transfer}
event E2 anchor t2 window 0..100
control start E1
edge E1 -> E2 if count(b) = 0
";
        let doc = parse_fm(text).unwrap();
        let printed = print_fm(&doc);
        assert_eq!(parse_fm(&printed).unwrap(), doc);
        assert_eq!(doc.model.groups[0].count_of("f2"), 2);
    }
}
