use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use crate::fm::guard::EvalContext;
use crate::fm::model::{Attrs, FmModel, Position, Power, Stage, StageRef, Value};
use crate::fm::validate::validate;

use super::ExecError;

pub type ThingId = u64;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Thing {
    pub id: ThingId,
    pub kind: String,
    pub attrs: Attrs,
}

/// Runtime position of a thing inside a machine.
///
/// The Transfer stage is split by direction: things arriving from another
/// machine (or injected by the environment) wait in `TransferIn`, things on
/// their way out wait in `TransferOut`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Create,
    Receive,
    Process,
    Release,
    TransferIn,
    TransferOut,
    Storage,
}

impl Slot {
    pub const ALL: [Slot; 7] = [
        Slot::Create,
        Slot::Receive,
        Slot::Process,
        Slot::Release,
        Slot::TransferIn,
        Slot::TransferOut,
        Slot::Storage,
    ];

    pub fn stage(self) -> Option<Stage> {
        Some(match self {
            Slot::Create => Stage::Create,
            Slot::Receive => Stage::Receive,
            Slot::Process => Stage::Process,
            Slot::Release => Stage::Release,
            Slot::TransferIn | Slot::TransferOut => Stage::Transfer,
            Slot::Storage => return None,
        })
    }

    /// Slot a thing lands in when it arrives at `stage`; inbound decides Transfer's direction.
    pub fn arriving(stage: Stage, inbound: bool) -> Slot {
        match stage {
            Stage::Create => Slot::Create,
            Stage::Receive => Slot::Receive,
            Stage::Process => Slot::Process,
            Stage::Release => Slot::Release,
            Stage::Transfer if inbound => Slot::TransferIn,
            Stage::Transfer => Slot::TransferOut,
        }
    }

    pub fn from_position(p: Position, inbound: bool) -> Slot {
        match p {
            Position::Stage(s) => Slot::arriving(s, inbound),
            Position::Storage => Slot::Storage,
        }
    }

    /// Element name used in trace records: `m.Stage` or `m.storage`.
    pub fn element(self, machine: &str) -> String {
        match self.stage() {
            Some(s) => format!("{machine}.{s}"),
            None => format!("{machine}.storage"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClockState {
    pub started: u64,
    pub deadline: u64,
}

/// A trigger whose guard held when it was enqueued.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PendingTrigger {
    pub trigger: String,
    /// Attribute values of the thing to create, fixed at enqueue time.
    pub attrs: Attrs,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecState {
    pub now: u64,
    pub placements: BTreeMap<(String, Slot), Vec<Thing>>,
    pub power: BTreeMap<String, Power>,
    pub clocks: BTreeMap<String, Option<ClockState>>,
    pub pending: VecDeque<PendingTrigger>,
    /// Things that left the modelled spheres.
    pub environment: Vec<Thing>,
    pub next_id: ThingId,
}

impl ExecState {
    pub fn empty() -> Self {
        ExecState {
            now: 0,
            placements: BTreeMap::new(),
            power: BTreeMap::new(),
            clocks: BTreeMap::new(),
            pending: VecDeque::new(),
            environment: Vec::new(),
            next_id: 1,
        }
    }

    pub fn things_at(&self, machine: &str, slot: Slot) -> &[Thing] {
        self.placements
            .get(&(machine.to_string(), slot))
            .map_or(&[], Vec::as_slice)
    }

    pub fn stored(&self, machine: &str) -> &[Thing] {
        self.things_at(machine, Slot::Storage)
    }

    pub fn things_in<'a>(&'a self, machine: &'a str) -> impl Iterator<Item = &'a Thing> + 'a {
        self.placements
            .iter()
            .filter(move |((m, _), _)| m == machine)
            .flat_map(|(_, v)| v.iter())
    }

    pub fn all_things(&self) -> impl Iterator<Item = &Thing> {
        self.placements
            .values()
            .flat_map(|v| v.iter())
            .chain(self.environment.iter())
    }

    pub fn thing_count(&self) -> usize {
        self.all_things().count()
    }

    pub fn power_of(&self, machine: &str) -> Power {
        self.power.get(machine).copied().unwrap_or(Power::On)
    }

    pub fn clock(&self, id: &str) -> Option<ClockState> {
        self.clocks.get(id).copied().flatten()
    }

    pub fn locate(&self, id: ThingId) -> Option<(String, Slot)> {
        self.placements
            .iter()
            .find(|(_, v)| v.iter().any(|t| t.id == id))
            .map(|(k, _)| k.clone())
    }

    pub(crate) fn put(&mut self, machine: &str, slot: Slot, thing: Thing) {
        self.placements
            .entry((machine.to_string(), slot))
            .or_default()
            .push(thing);
    }

    pub(crate) fn take(&mut self, machine: &str, slot: Slot, id: ThingId) -> Option<Thing> {
        let key = (machine.to_string(), slot);
        let list = self.placements.get_mut(&key)?;
        let pos = list.iter().position(|t| t.id == id)?;
        let thing = list.remove(pos);
        if list.is_empty() {
            self.placements.remove(&key);
        }
        Some(thing)
    }

    pub(crate) fn take_first(&mut self, machine: &str, slot: Slot) -> Option<Thing> {
        let id = self.things_at(machine, slot).first()?.id;
        self.take(machine, slot, id)
    }

    pub(crate) fn new_thing(&mut self, kind: String, attrs: Attrs) -> Thing {
        let id = self.next_id;
        self.next_id += 1;
        Thing { id, kind, attrs }
    }
}

impl fmt::Display for ExecState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={}", self.now)?;
        for ((m, slot), things) in &self.placements {
            let ids: Vec<String> = things.iter().map(|t| t.id.to_string()).collect();
            write!(f, " {}=[{}]", slot.element(m), ids.join(","))?;
        }
        for (m, p) in &self.power {
            write!(f, " {m}:{p}")?;
        }
        for (c, s) in &self.clocks {
            if let Some(s) = s {
                write!(f, " {c}@{}", s.deadline)?;
            }
        }
        if !self.pending.is_empty() {
            let p: Vec<&str> = self.pending.iter().map(|p| p.trigger.as_str()).collect();
            write!(f, " pending=[{}]", p.join(","))?;
        }
        if !self.environment.is_empty() {
            write!(f, " env={}", self.environment.len())?;
        }
        Ok(())
    }
}

/// Thing kind for a thing placed into `machine` by injection or creation.
pub fn kind_for(model: &FmModel, machine: &str) -> String {
    match model.machine(machine) {
        Some(m) if m.thing_kind != "*" => m.thing_kind.clone(),
        _ => "thing".to_string(),
    }
}

/// Initial state: declared initial things, initial power, no deadlines, `now = 0`.
pub fn init_state(model: &FmModel) -> Result<ExecState, ExecError> {
    let report = validate(model);
    if !report.is_valid() {
        return Err(ExecError::InvalidModel(report));
    }
    Ok(init_state_unchecked(model))
}

pub fn init_state_unchecked(model: &FmModel) -> ExecState {
    let mut st = ExecState::empty();
    for m in &model.machines {
        st.power.insert(m.id.clone(), m.initial_power);
    }
    for c in &model.clocks {
        st.clocks.insert(c.id.clone(), None);
    }
    for th in &model.things {
        let thing = st.new_thing(kind_for(model, &th.machine), th.attrs.clone());
        st.put(&th.machine, Slot::from_position(th.position, true), thing);
    }
    st
}

/// Guard evaluation view of a state, optionally focused on one thing.
pub struct StateView<'a> {
    pub state: &'a ExecState,
    pub thing: Option<&'a Attrs>,
    pub model: &'a FmModel,
}

impl<'a> StateView<'a> {
    pub fn new(state: &'a ExecState, model: &'a FmModel) -> Self {
        StateView {
            state,
            thing: None,
            model,
        }
    }
}

impl EvalContext for StateView<'_> {
    fn attr(&self, name: &str) -> Option<Value> {
        self.thing.and_then(|a| a.get(name).cloned())
    }

    fn count(&self, machine: &str) -> Option<i64> {
        self.model.machine(machine)?;
        Some(self.state.things_in(machine).count() as i64)
    }

    fn sum(&self, machine: &str, attr: &str) -> Option<i64> {
        self.model.machine(machine)?;
        Some(
            self.state
                .things_in(machine)
                .filter_map(|t| match t.attrs.get(attr) {
                    Some(Value::Int(i)) => Some(*i),
                    _ => None,
                })
                .sum(),
        )
    }

    fn power(&self, machine: &str) -> Option<Power> {
        self.model.machine(machine)?;
        Some(self.state.power_of(machine))
    }

    fn clock_active(&self, clock: &str) -> Option<bool> {
        self.model.clock(clock)?;
        Some(self.state.clock(clock).is_some())
    }

    fn elapsed(&self, clock: &str) -> Option<Option<i64>> {
        self.model.clock(clock)?;
        Some(
            self.state
                .clock(clock)
                .map(|c| self.state.now.saturating_sub(c.started) as i64),
        )
    }
}

/// Stage reference for a slot, if it is a stage.
pub fn slot_stage_ref(machine: &str, slot: Slot) -> Option<StageRef> {
    slot.stage().map(|s| StageRef::new(machine, s))
}
