use std::collections::BTreeMap;
use std::fmt;

use super::guard::Expr;

/// One of the five mutually exclusive stages of a flowthing machine.
///
/// The declaration order is the canonical stage order used by the executor
/// when it has to pick among several movable things.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Create,
    Receive,
    Process,
    Release,
    Transfer,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Create,
        Stage::Receive,
        Stage::Process,
        Stage::Release,
        Stage::Transfer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Create => "Create",
            Stage::Receive => "Receive",
            Stage::Process => "Process",
            Stage::Release => "Release",
            Stage::Transfer => "Transfer",
        }
    }

    /// Accepts the canonical spelling and a few common aliases
    /// (`Received`, `Processed`, ...).
    pub fn parse(s: &str) -> Option<Stage> {
        let lower = s.to_ascii_lowercase();
        Some(match lower.as_str() {
            "create" | "created" => Stage::Create,
            "receive" | "received" => Stage::Receive,
            "process" | "processed" => Stage::Process,
            "release" | "released" => Stage::Release,
            "transfer" | "transferred" => Stage::Transfer,
            _ => return None,
        })
    }

    /// Stages dropped by the `NoTransport` simplification.
    pub fn is_transport(self) -> bool {
        matches!(self, Stage::Release | Stage::Transfer | Stage::Receive)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Power {
    On,
    Off,
}

impl Power {
    pub fn name(self) -> &'static str {
        match self {
            Power::On => "on",
            Power::Off => "off",
        }
    }
}

impl fmt::Display for Power {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A stage of a particular machine, written `machine.Stage`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StageRef {
    pub machine: String,
    pub stage: Stage,
}

impl StageRef {
    pub fn new(machine: impl Into<String>, stage: Stage) -> Self {
        StageRef {
            machine: machine.into(),
            stage,
        }
    }
}

impl fmt::Display for StageRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.machine, self.stage)
    }
}

/// Where a thing sits inside a machine: at one of its stages or in its storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Position {
    Stage(Stage),
    Storage,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Stage(s) => f.write_str(s.name()),
            Position::Storage => f.write_str("storage"),
        }
    }
}

/// Attribute value carried by a thing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Str(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => write!(f, "\"{s}\""),
        }
    }
}

pub type Attrs = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Machine {
    pub id: String,
    pub sphere: String,
    /// Species of thing handled here; `*` accepts any kind.
    pub thing_kind: String,
    pub stages: Vec<Stage>,
    pub has_storage: bool,
    pub initial_power: Power,
}

impl Machine {
    pub fn has_stage(&self, stage: Stage) -> bool {
        self.stages.contains(&stage)
    }

    pub fn accepts_kind(&self, kind: &str) -> bool {
        self.thing_kind == "*" || self.thing_kind == kind
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowArc {
    pub id: String,
    pub from: StageRef,
    pub to: StageRef,
    pub label: Option<String>,
}

impl FlowArc {
    pub fn is_inter_machine(&self) -> bool {
        self.from.machine != self.to.machine
    }
}

/// Moves things from a stage into the machine's storage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Park {
    pub id: String,
    pub from: StageRef,
}

/// Moves stored things out of storage into a stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unpark {
    pub id: String,
    pub to: StageRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TriggerSource {
    /// Fires whenever a thing arrives at the stage.
    Stage(StageRef),
    /// Fires when the clock's deadline has passed.
    Timeout(String),
    /// Machine-level source; only produced by simplification.
    Machine(String),
}

impl fmt::Display for TriggerSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TriggerSource::Stage(s) => write!(f, "{s}"),
            TriggerSource::Timeout(c) => write!(f, "{c}.timeout"),
            TriggerSource::Machine(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TriggerTarget {
    Create {
        machine: String,
        attrs: Vec<(String, Expr)>,
    },
    SetPower {
        machine: String,
        power: Power,
    },
    StartClock {
        clock: String,
        duration: u64,
    },
    StopClock {
        clock: String,
    },
    /// Releases stored things (the oldest one, or all of them) into Release.
    Release {
        machine: String,
        all: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerArc {
    pub id: String,
    pub from: TriggerSource,
    pub to: TriggerTarget,
    pub guard: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clock {
    pub id: String,
    pub sphere: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitialThing {
    pub machine: String,
    pub position: Position,
    pub attrs: Attrs,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupMember {
    pub element: String,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupGate {
    /// The group runs only while a thing waits at this stage, and takes it along.
    Stage(StageRef),
    /// The group runs only as the effect of this clock's timeout.
    Timeout(String),
}

/// Flows, parks, unparks and triggers that execute as one uninterruptible action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub id: String,
    pub members: Vec<GroupMember>,
    pub gate: Option<GroupGate>,
    pub guard: Option<Expr>,
}

impl Group {
    pub fn contains(&self, element: &str) -> bool {
        self.members.iter().any(|m| m.element == element)
    }

    pub fn count_of(&self, element: &str) -> u32 {
        self.members
            .iter()
            .find(|m| m.element == element)
            .map_or(0, |m| m.count)
    }
}

/// Machine-to-machine arrow standing for a collapsed transport chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub id: String,
    pub from: String,
    pub to: String,
}

/// A static flowthing-machine diagram.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FmModel {
    pub spheres: Vec<String>,
    pub machines: Vec<Machine>,
    pub flows: Vec<FlowArc>,
    pub parks: Vec<Park>,
    pub unparks: Vec<Unpark>,
    pub triggers: Vec<TriggerArc>,
    pub clocks: Vec<Clock>,
    pub groups: Vec<Group>,
    pub links: Vec<Link>,
    pub things: Vec<InitialThing>,
}

/// Any addressable element of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Element<'a> {
    Sphere(&'a str),
    Machine(&'a Machine),
    Stage(&'a Machine, Stage),
    Storage(&'a Machine),
    Flow(&'a FlowArc),
    Park(&'a Park),
    Unpark(&'a Unpark),
    Trigger(&'a TriggerArc),
    Clock(&'a Clock),
    Group(&'a Group),
    Link(&'a Link),
}

impl FmModel {
    pub fn machine(&self, id: &str) -> Option<&Machine> {
        self.machines.iter().find(|m| m.id == id)
    }

    pub fn machine_index(&self, id: &str) -> Option<usize> {
        self.machines.iter().position(|m| m.id == id)
    }

    pub fn clock(&self, id: &str) -> Option<&Clock> {
        self.clocks.iter().find(|c| c.id == id)
    }

    pub fn trigger(&self, id: &str) -> Option<&TriggerArc> {
        self.triggers.iter().find(|t| t.id == id)
    }

    pub fn group(&self, id: &str) -> Option<&Group> {
        self.groups.iter().find(|g| g.id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty()
            && self.machines.is_empty()
            && self.clocks.is_empty()
            && self.things.is_empty()
    }

    /// Id of the group an arc, park or unpark belongs to, if any.
    pub fn group_of(&self, element: &str) -> Option<&Group> {
        self.groups.iter().find(|g| g.contains(element))
    }

    /// Index of every element by id.
    ///
    /// Stages are indexed as `machine.Stage` and storages as `machine.storage`.
    pub fn element_index(&self) -> BTreeMap<String, Element<'_>> {
        let mut index = BTreeMap::new();
        for s in &self.spheres {
            index.insert(s.clone(), Element::Sphere(s));
        }
        for m in &self.machines {
            index.insert(m.id.clone(), Element::Machine(m));
            for &st in &m.stages {
                index.insert(format!("{}.{}", m.id, st), Element::Stage(m, st));
            }
            if m.has_storage {
                index.insert(format!("{}.storage", m.id), Element::Storage(m));
            }
        }
        for f in &self.flows {
            index.insert(f.id.clone(), Element::Flow(f));
        }
        for p in &self.parks {
            index.insert(p.id.clone(), Element::Park(p));
        }
        for u in &self.unparks {
            index.insert(u.id.clone(), Element::Unpark(u));
        }
        for t in &self.triggers {
            index.insert(t.id.clone(), Element::Trigger(t));
        }
        for c in &self.clocks {
            index.insert(c.id.clone(), Element::Clock(c));
        }
        for g in &self.groups {
            index.insert(g.id.clone(), Element::Group(g));
        }
        for l in &self.links {
            index.insert(l.id.clone(), Element::Link(l));
        }
        index
    }

    /// Ids of declared elements, excluding the derived stage and storage names.
    pub fn declared_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = Vec::new();
        ids.extend(self.machines.iter().map(|m| m.id.as_str()));
        ids.extend(self.flows.iter().map(|f| f.id.as_str()));
        ids.extend(self.parks.iter().map(|p| p.id.as_str()));
        ids.extend(self.unparks.iter().map(|u| u.id.as_str()));
        ids.extend(self.triggers.iter().map(|t| t.id.as_str()));
        ids.extend(self.clocks.iter().map(|c| c.id.as_str()));
        ids.extend(self.groups.iter().map(|g| g.id.as_str()));
        ids.extend(self.links.iter().map(|l| l.id.as_str()));
        ids
    }

    /// Parent chain of a sphere path, innermost last: `a/b/c` gives `a`, `a/b`, `a/b/c`.
    pub fn sphere_chain(path: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut acc = String::new();
        for part in path.split('/') {
            if !acc.is_empty() {
                acc.push('/');
            }
            acc.push_str(part);
            out.push(acc.clone());
        }
        out
    }

    /// Direct child spheres of `path` (use `""` for the roots).
    pub fn sphere_children(&self, path: &str) -> Vec<&str> {
        self.spheres
            .iter()
            .filter(|s| match s.rsplit_once('/') {
                Some((parent, _)) => parent == path,
                None => path.is_empty(),
            })
            .map(String::as_str)
            .collect()
    }

    pub fn machines_in<'a>(&'a self, sphere: &'a str) -> impl Iterator<Item = &'a Machine> + 'a {
        self.machines.iter().filter(move |m| m.sphere == sphere)
    }
}
