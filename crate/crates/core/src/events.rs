//! Events as diagram regions, event traces and execution control.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::exec::{
    ExecError, ExecState, FmStateGraph, MicroStepRecord, Replayer, StateView, Trace,
};
use crate::fm::guard::Expr;
use crate::fm::model::FmModel;
use crate::graph::Language;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EventError {
    #[error("duplicate event `{0}`")]
    DuplicateId(String),
    #[error("events `{0}` and `{1}` share anchor `{2}`")]
    AnchorCollision(String, String, String),
    #[error("anchor of `{0}` is outside its region")]
    AnchorOutsideRegion(String),
    #[error("event `{0}` has an empty time window")]
    EmptyWindow(String),
    #[error("control edge references undeclared event `{0}`")]
    UnknownEvent(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub id: String,
    pub region: BTreeSet<String>,
    pub anchor: String,
    /// Inclusive bounds; occurrences outside are not events.
    pub window: Option<(u64, u64)>,
}

impl Event {
    /// An event whose region is just its anchor.
    pub fn at(id: impl Into<String>, anchor: impl Into<String>) -> Event {
        let anchor = anchor.into();
        Event {
            id: id.into(),
            region: BTreeSet::from([anchor.clone()]),
            anchor,
            window: None,
        }
    }

    fn admits(&self, time: u64) -> bool {
        self.window.is_none_or(|(lo, hi)| lo <= time && time <= hi)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventSet {
    events: Vec<Event>,
    by_anchor: BTreeMap<String, usize>,
}

impl EventSet {
    pub fn new(events: Vec<Event>) -> Result<EventSet, EventError> {
        let mut by_anchor = BTreeMap::new();
        let mut ids = BTreeSet::new();
        for (i, e) in events.iter().enumerate() {
            if !ids.insert(e.id.as_str()) {
                return Err(EventError::DuplicateId(e.id.clone()));
            }
            if !e.region.contains(&e.anchor) {
                return Err(EventError::AnchorOutsideRegion(e.id.clone()));
            }
            if matches!(e.window, Some((lo, hi)) if lo > hi) {
                return Err(EventError::EmptyWindow(e.id.clone()));
            }
            if let Some(&j) = by_anchor.get(&e.anchor) {
                let other: &Event = &events[j];
                return Err(EventError::AnchorCollision(
                    other.id.clone(),
                    e.id.clone(),
                    e.anchor.clone(),
                ));
            }
            by_anchor.insert(e.anchor.clone(), i);
        }
        Ok(EventSet { events, by_anchor })
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.events.iter()
    }

    pub fn get(&self, id: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.id == id)
    }

    pub fn by_anchor(&self, element: &str) -> Option<&Event> {
        self.by_anchor.get(element).map(|&i| &self.events[i])
    }

    pub fn ids(&self) -> Vec<&str> {
        self.events.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events occurring in one micro-step, in element order.
    pub fn occurrences(&self, record: &MicroStepRecord) -> Vec<&str> {
        self.in_elements(&record.elements, record.time)
    }

    fn in_elements(&self, elements: &[String], time: u64) -> Vec<&str> {
        elements
            .iter()
            .filter_map(|el| self.by_anchor(el))
            .filter(|e| e.admits(time))
            .map(|e| e.id.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlEdge {
    pub from: String,
    pub to: String,
    pub guard: Option<Expr>,
}

/// Execution control over events. A virtual start is a node that is not an
/// event: the first event must then be one of its successors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<ControlEdge>,
    pub start: String,
    pub virtual_start: bool,
}

impl ControlGraph {
    pub fn new(
        events: &EventSet,
        edges: Vec<ControlEdge>,
        start: impl Into<String>,
    ) -> Result<ControlGraph, EventError> {
        let start = start.into();
        let virtual_start = events.get(&start).is_none();
        let mut nodes: Vec<String> = events.ids().into_iter().map(str::to_string).collect();
        if virtual_start {
            nodes.insert(0, start.clone());
        }
        for e in &edges {
            for end in [&e.from, &e.to] {
                if !nodes.contains(end) {
                    return Err(EventError::UnknownEvent(end.clone()));
                }
            }
            if virtual_start && e.to == start {
                return Err(EventError::UnknownEvent(e.to.clone()));
            }
        }
        Ok(ControlGraph {
            nodes,
            edges,
            start,
            virtual_start,
        })
    }

    pub fn successors(&self, from: &str) -> impl Iterator<Item = &ControlEdge> {
        let from = from.to_string();
        self.edges.iter().filter(move |e| e.from == from)
    }

    /// Events allowed at position 0.
    pub fn initial(&self) -> BTreeSet<String> {
        if self.virtual_start {
            self.successors(&self.start).map(|e| e.to.clone()).collect()
        } else {
            BTreeSet::from([self.start.clone()])
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventTrace {
    pub occurrences: Vec<(String, u64)>,
}

impl EventTrace {
    pub fn ids(&self) -> Vec<&str> {
        self.occurrences.iter().map(|(e, _)| e.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.occurrences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occurrences.is_empty()
    }
}

/// One `event<TAB>time` pair per line.
impl fmt::Display for EventTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (e, t) in &self.occurrences {
            writeln!(f, "{e}\t{t}")?;
        }
        Ok(())
    }
}

impl FromStr for EventTrace {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut occurrences: Vec<(String, u64)> = Vec::new();
        for (n, line) in s.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let (e, t) = line
                .split_once('\t')
                .ok_or_else(|| format!("line {}: expected `event<TAB>time`", n + 1))?;
            let t: u64 = t
                .trim()
                .parse()
                .map_err(|_| format!("line {}: bad time `{t}`", n + 1))?;
            if occurrences.last().is_some_and(|(_, prev)| *prev > t) {
                return Err(format!("line {}: time goes backwards", n + 1));
            }
            occurrences.push((e.to_string(), t));
        }
        Ok(EventTrace { occurrences })
    }
}

pub fn extract_events(records: &[MicroStepRecord], events: &EventSet) -> EventTrace {
    let occurrences = records
        .iter()
        .flat_map(|r| {
            events
                .occurrences(r)
                .into_iter()
                .map(move |e| (e.to_string(), r.time))
        })
        .collect();
    EventTrace { occurrences }
}

/// Event trace plus the state right after each occurrence, for guard checks.
pub fn extract_events_with_states(
    model: &FmModel,
    trace: &Trace,
    events: &EventSet,
) -> Result<(EventTrace, Vec<ExecState>), ExecError> {
    let mut rp = Replayer::new(model)?;
    let mut etrace = EventTrace::default();
    let mut states = Vec::new();
    for r in &trace.records {
        rp.apply(r)?;
        for e in events.occurrences(r) {
            etrace.occurrences.push((e.to_string(), r.time));
            states.push(rp.state.clone());
        }
    }
    Ok((etrace, states))
}

/// States snapshotted at each occurrence, used to evaluate edge guards.
pub struct GuardStates<'a> {
    pub model: &'a FmModel,
    pub states: &'a [ExecState],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Conformance {
    Conformant,
    Violation {
        index: usize,
        expected: BTreeSet<String>,
    },
}

impl Conformance {
    pub fn is_conformant(&self) -> bool {
        matches!(self, Conformance::Conformant)
    }
}

/// Checks an event trace against a control graph. Without state snapshots,
/// edge guards are taken to hold.
pub fn conform(
    etrace: &EventTrace,
    control: &ControlGraph,
    guards: Option<&GuardStates>,
) -> Conformance {
    let ids = etrace.ids();
    let Some(first) = ids.first() else {
        return Conformance::Conformant;
    };
    let initial = control.initial();
    if !initial.contains(*first) {
        return Conformance::Violation {
            index: 0,
            expected: initial,
        };
    }
    for i in 1..ids.len() {
        let holds = |e: &ControlEdge| match (&e.guard, guards) {
            (Some(g), Some(gs)) => match gs.states.get(i - 1) {
                Some(st) => g.holds(&StateView::new(st, gs.model)),
                None => true,
            },
            _ => true,
        };
        let expected: BTreeSet<String> = control
            .successors(ids[i - 1])
            .filter(|e| holds(e))
            .map(|e| e.to.clone())
            .collect();
        if !expected.contains(ids[i]) {
            return Conformance::Violation { index: i, expected };
        }
    }
    Conformance::Conformant
}

/// Event words of length at most `depth` over an explored state graph.
pub fn event_language(graph: &FmStateGraph, events: &EventSet, depth: usize) -> Language {
    graph.language(depth, |edge| {
        events
            .in_elements(&edge.subjects, 0)
            .into_iter()
            .map(str::to_string)
            .collect()
    })
}
