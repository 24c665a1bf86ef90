//! Micro-step semantics: which actions are enabled in a state and what
//! applying one of them does.

use std::fmt;

use crate::fm::model::{
    Attrs, FlowArc, FmModel, Group, GroupGate, Power, Stage, TriggerSource, TriggerTarget,
};

use super::record::{ActionKind, MicroStepRecord, ThingRecord};
use super::state::{kind_for, ExecState, PendingTrigger, Slot, StateView, Thing, ThingId};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Via {
    Flow(String),
    Park(String),
    Unpark(String),
    /// Leave the model from a Transfer stage with no outgoing arc.
    Export,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Timeout {
        clock: String,
    },
    FireTrigger {
        index: usize,
    },
    Group {
        group: String,
    },
    Move {
        thing: ThingId,
        machine: String,
        slot: Slot,
        via: Via,
    },
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Timeout { clock } => write!(f, "timeout {clock}"),
            Action::FireTrigger { index } => write!(f, "fire #{index}"),
            Action::Group { group } => write!(f, "group {group}"),
            Action::Move {
                thing,
                machine,
                slot,
                via,
            } => {
                let via = match via {
                    Via::Flow(id) | Via::Park(id) | Via::Unpark(id) => id.as_str(),
                    Via::Export => "export",
                };
                write!(f, "move {thing} from {} via {via}", slot.element(machine))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("action `{action}` rejected: {reason}")]
pub struct StepError {
    pub action: String,
    pub reason: String,
}

/// Slot a flow draws from.
pub(crate) fn source_slot(f: &FlowArc) -> Slot {
    match f.from.stage {
        Stage::Transfer if f.is_inter_machine() => Slot::TransferOut,
        Stage::Transfer => Slot::TransferIn,
        s => Slot::arriving(s, false),
    }
}

/// Slot a flow delivers into.
pub(crate) fn dest_slot(f: &FlowArc) -> Slot {
    Slot::arriving(f.to.stage, f.is_inter_machine())
}

/// Receive and Process refuse things while their machine is OFF.
fn open(state: &ExecState, machine: &str, slot: Slot) -> bool {
    !matches!(slot, Slot::Receive | Slot::Process) || state.power_of(machine) == Power::On
}

fn grouped(model: &FmModel, element: &str) -> bool {
    model.group_of(element).is_some()
}

fn has_outbound_arc(model: &FmModel, machine: &str) -> bool {
    model.flows.iter().any(|f| {
        f.from.machine == machine && f.from.stage == Stage::Transfer && f.is_inter_machine()
    })
}

/// Every move option of one thing, in declaration order of the arcs.
fn move_options(model: &FmModel, state: &ExecState, machine: &str, slot: Slot) -> Vec<Via> {
    let mut out = Vec::new();
    if slot == Slot::Storage {
        for u in model.unparks.iter().filter(|u| u.to.machine == machine) {
            if !grouped(model, &u.id) && open(state, machine, Slot::arriving(u.to.stage, false)) {
                out.push(Via::Unpark(u.id.clone()));
            }
        }
        return out;
    }
    for f in &model.flows {
        if f.from.machine == machine
            && source_slot(f) == slot
            && !grouped(model, &f.id)
            && open(state, &f.to.machine, dest_slot(f))
        {
            out.push(Via::Flow(f.id.clone()));
        }
    }
    if !matches!(slot, Slot::TransferIn | Slot::TransferOut) {
        let stage = slot.stage();
        for p in &model.parks {
            if p.from.machine == machine && Some(p.from.stage) == stage && !grouped(model, &p.id) {
                out.push(Via::Park(p.id.clone()));
            }
        }
    }
    if slot == Slot::TransferOut && !has_outbound_arc(model, machine) {
        out.push(Via::Export);
    }
    out
}

/// Every legal next micro-step, in canonical order: expired timeouts, queued
/// triggers, enabled groups, then thing moves by machine declaration order,
/// stage order and arrival order.
pub fn enabled_actions(state: &ExecState, model: &FmModel) -> Vec<Action> {
    let mut out = Vec::new();
    for c in &model.clocks {
        if state.clock(&c.id).is_some_and(|cs| cs.deadline < state.now) {
            out.push(Action::Timeout {
                clock: c.id.clone(),
            });
        }
    }
    for index in 0..state.pending.len() {
        out.push(Action::FireTrigger { index });
    }
    for g in &model.groups {
        if !matches!(g.gate, Some(GroupGate::Timeout(_))) && try_group(model, state, g).is_some() {
            out.push(Action::Group {
                group: g.id.clone(),
            });
        }
    }
    for m in &model.machines {
        for slot in Slot::ALL {
            for thing in state.things_at(&m.id, slot) {
                for via in move_options(model, state, &m.id, slot) {
                    out.push(Action::Move {
                        thing: thing.id,
                        machine: m.id.clone(),
                        slot,
                        via,
                    });
                }
            }
        }
    }
    out
}

/// Applies one enabled action.
pub fn step(
    state: &ExecState,
    model: &FmModel,
    action: &Action,
) -> Result<(ExecState, Vec<MicroStepRecord>), StepError> {
    let reject = |reason: String| StepError {
        action: action.to_string(),
        reason,
    };
    let mut eng = Engine::new(model, state.clone());
    match action {
        Action::Timeout { clock } => {
            match state.clock(clock) {
                Some(cs) if cs.deadline < state.now => {}
                Some(cs) => return Err(reject(format!("deadline {} has not passed", cs.deadline))),
                None => return Err(reject(format!("clock `{clock}` is not running"))),
            }
            eng.timeout(clock);
        }
        Action::FireTrigger { index } => {
            let pending = eng
                .state
                .pending
                .remove(*index)
                .ok_or_else(|| reject(format!("no pending trigger #{index}")))?;
            eng.fire(&pending.trigger, pending.attrs, None);
        }
        Action::Group { group } => {
            let g = model
                .group(group)
                .ok_or_else(|| reject(format!("unknown group `{group}`")))?;
            if matches!(g.gate, Some(GroupGate::Timeout(_))) {
                return Err(reject("group only runs on its clock's timeout".into()));
            }
            return try_group(model, state, g).ok_or_else(|| reject("group is not enabled".into()));
        }
        Action::Move {
            thing,
            machine,
            slot,
            via,
        } => {
            if !state
                .things_at(machine, *slot)
                .iter()
                .any(|t| t.id == *thing)
            {
                return Err(reject(format!(
                    "no thing {thing} at {}",
                    slot.element(machine)
                )));
            }
            if !move_options(model, state, machine, *slot).contains(via) {
                return Err(reject("move is not enabled".into()));
            }
            eng.apply_move(*thing, machine, *slot, via);
        }
    }
    Ok((eng.state, eng.records))
}

/// Runs a group on a copy of the state; `None` when it cannot complete.
pub(crate) fn try_group(
    model: &FmModel,
    state: &ExecState,
    g: &Group,
) -> Option<(ExecState, Vec<MicroStepRecord>)> {
    if let Some(guard) = &g.guard {
        let view = StateView {
            state,
            thing: None,
            model,
        };
        if !guard.holds(&view) {
            return None;
        }
    }
    let mut eng = Engine::new(model, state.clone());
    eng.record(ActionKind::Group, vec![g.id.clone()], None);
    if let Some(GroupGate::Stage(s)) = &g.gate {
        let slot = Slot::arriving(s.stage, true);
        let id = eng.state.things_at(&s.machine, slot).first()?.id;
        eng.walk(g, id, s.machine.clone(), slot)?;
    }
    for mem in &g.members {
        let Some(u) = model.unparks.iter().find(|u| u.id == mem.element) else {
            continue;
        };
        for _ in 0..mem.count {
            let slot = Slot::arriving(u.to.stage, false);
            if !open(&eng.state, &u.to.machine, slot) {
                return None;
            }
            let thing = eng.state.take_first(&u.to.machine, Slot::Storage)?;
            let id = thing.id;
            eng.state.put(&u.to.machine, slot, thing);
            eng.record(
                ActionKind::Unpark,
                vec![u.id.clone(), slot.element(&u.to.machine)],
                Some(ThingRecord { id, detail: None }),
            );
            eng.arrive(&u.to.machine, slot, id);
            eng.walk(g, id, u.to.machine.clone(), slot)?;
        }
    }
    for mem in &g.members {
        let Some(t) = model.trigger(&mem.element) else {
            continue;
        };
        for _ in 0..mem.count {
            let view = StateView {
                state: &eng.state,
                thing: None,
                model,
            };
            if t.guard.as_ref().is_some_and(|gd| !gd.holds(&view)) {
                continue;
            }
            let attrs = eng.create_attrs(&t.to, None)?;
            eng.fire(&t.id, attrs, Some(g))?;
        }
    }
    // Every flow, park and unpark member runs exactly its multiplicity.
    for mem in &g.members {
        if model.trigger(&mem.element).is_some() {
            continue;
        }
        let used = eng
            .records
            .iter()
            .filter(|r| {
                matches!(
                    r.action,
                    ActionKind::Move | ActionKind::Park | ActionKind::Unpark
                )
            })
            .filter(|r| r.elements.first() == Some(&mem.element))
            .count();
        if used != mem.count as usize {
            return None;
        }
    }
    Some((eng.state, eng.records))
}

pub(crate) struct Engine<'m> {
    pub model: &'m FmModel,
    pub state: ExecState,
    pub records: Vec<MicroStepRecord>,
}

impl<'m> Engine<'m> {
    pub fn new(model: &'m FmModel, state: ExecState) -> Self {
        Engine {
            model,
            state,
            records: Vec::new(),
        }
    }

    pub fn record(
        &mut self,
        action: ActionKind,
        elements: Vec<String>,
        thing: Option<ThingRecord>,
    ) {
        self.records.push(MicroStepRecord::new(
            self.state.now,
            action,
            elements,
            thing,
        ));
    }

    /// Evaluates creation attributes for a trigger target.
    fn create_attrs(&self, target: &TriggerTarget, thing: Option<&Attrs>) -> Option<Attrs> {
        let mut out = Attrs::new();
        if let TriggerTarget::Create { attrs, .. } = target {
            let view = StateView {
                state: &self.state,
                thing,
                model: self.model,
            };
            for (name, e) in attrs {
                out.insert(name.clone(), e.eval_value(&view).ok()?);
            }
        }
        Some(out)
    }

    /// Enqueues the non-group triggers sourced at `source` whose guards hold now.
    fn enqueue(&mut self, matches: impl Fn(&TriggerSource) -> bool, thing: Option<ThingId>) {
        let attrs = thing.and_then(|id| {
            self.state
                .all_things()
                .find(|t| t.id == id)
                .map(|t| t.attrs.clone())
        });
        for t in &self.model.triggers {
            if !matches(&t.from) || grouped(self.model, &t.id) {
                continue;
            }
            let view = StateView {
                state: &self.state,
                thing: attrs.as_ref(),
                model: self.model,
            };
            if t.guard.as_ref().is_some_and(|g| !g.holds(&view)) {
                continue;
            }
            // attribute initialisers that fail to evaluate suppress the trigger
            let Some(create) = self.create_attrs(&t.to, attrs.as_ref()) else {
                continue;
            };
            self.state.pending.push_back(PendingTrigger {
                trigger: t.id.clone(),
                attrs: create,
            });
        }
    }

    /// A thing has just arrived at a slot: the stage executes.
    pub fn arrive(&mut self, machine: &str, slot: Slot, thing: ThingId) {
        let Some(stage) = slot.stage() else { return };
        self.enqueue(
            |src| matches!(src, TriggerSource::Stage(s) if s.machine == machine && s.stage == stage),
            Some(thing),
        );
    }

    pub fn apply_move(&mut self, id: ThingId, machine: &str, slot: Slot, via: &Via) {
        let thing = self
            .state
            .take(machine, slot, id)
            .expect("move source checked by caller");
        let (dest_machine, dest_slot, kind, element) = match via {
            Via::Flow(fid) => {
                let f = self
                    .model
                    .flows
                    .iter()
                    .find(|f| &f.id == fid)
                    .expect("known flow");
                (
                    f.to.machine.clone(),
                    dest_slot(f),
                    ActionKind::Move,
                    fid.clone(),
                )
            }
            Via::Park(pid) => (
                machine.to_string(),
                Slot::Storage,
                ActionKind::Park,
                pid.clone(),
            ),
            Via::Unpark(uid) => {
                let u = self
                    .model
                    .unparks
                    .iter()
                    .find(|u| &u.id == uid)
                    .expect("known unpark");
                (
                    machine.to_string(),
                    Slot::arriving(u.to.stage, false),
                    ActionKind::Unpark,
                    uid.clone(),
                )
            }
            Via::Export => {
                self.state.environment.push(thing);
                self.record(
                    ActionKind::Move,
                    vec!["env".into()],
                    Some(ThingRecord { id, detail: None }),
                );
                return;
            }
        };
        self.state.put(&dest_machine, dest_slot, thing);
        self.record(
            kind,
            vec![element, dest_slot.element(&dest_machine)],
            Some(ThingRecord { id, detail: None }),
        );
        self.arrive(&dest_machine, dest_slot, id);
    }

    /// Moves a thing along the group's elements until none leaves its position.
    fn walk(&mut self, g: &Group, id: ThingId, mut machine: String, mut slot: Slot) -> Option<()> {
        loop {
            if slot == Slot::Storage {
                return Some(());
            }
            let flow =
                self.model.flows.iter().find(|f| {
                    g.contains(&f.id) && f.from.machine == machine && source_slot(f) == slot
                });
            let via = if let Some(f) = flow {
                if !open(&self.state, &f.to.machine, dest_slot(f)) {
                    return None;
                }
                Via::Flow(f.id.clone())
            } else {
                let stage = slot.stage();
                let park = self.model.parks.iter().find(|p| {
                    g.contains(&p.id)
                        && p.from.machine == machine
                        && Some(p.from.stage) == stage
                        && !matches!(slot, Slot::TransferIn | Slot::TransferOut)
                });
                match park {
                    Some(p) => Via::Park(p.id.clone()),
                    None => return Some(()),
                }
            };
            let (next_machine, next_slot) = match &via {
                Via::Flow(fid) => {
                    let f = self
                        .model
                        .flows
                        .iter()
                        .find(|f| &f.id == fid)
                        .expect("known flow");
                    (f.to.machine.clone(), dest_slot(f))
                }
                _ => (machine.clone(), Slot::Storage),
            };
            self.apply_move(id, &machine, slot, &via);
            machine = next_machine;
            slot = next_slot;
        }
    }

    /// Applies a trigger's effect. Inside a group, created things walk on at once.
    fn fire(&mut self, trigger: &str, attrs: Attrs, group: Option<&Group>) -> Option<()> {
        let t = self
            .model
            .trigger(trigger)
            .expect("pending trigger exists")
            .clone();
        match &t.to {
            TriggerTarget::Create { machine, .. } => {
                let thing = self.state.new_thing(kind_for(self.model, machine), attrs);
                let rec = ThingRecord {
                    id: thing.id,
                    detail: Some((thing.kind.clone(), thing.attrs.clone())),
                };
                let id = thing.id;
                self.state.put(machine, Slot::Create, thing);
                self.record(
                    ActionKind::Create,
                    vec![t.id.clone(), Slot::Create.element(machine)],
                    Some(rec),
                );
                self.arrive(machine, Slot::Create, id);
                if let Some(g) = group {
                    self.walk(g, id, machine.clone(), Slot::Create)?;
                }
            }
            TriggerTarget::SetPower { machine, power } => {
                let elements = vec![t.id.clone(), machine.clone(), power.name().to_string()];
                if self.state.power_of(machine) == *power {
                    self.record(ActionKind::TriggerFire, elements, None);
                } else {
                    self.state.power.insert(machine.clone(), *power);
                    self.record(ActionKind::PowerChange, elements, None);
                }
            }
            TriggerTarget::StartClock { clock, duration } => {
                let started = self.state.now;
                let deadline = started + duration;
                self.state.clocks.insert(
                    clock.clone(),
                    Some(super::state::ClockState { started, deadline }),
                );
                self.record(
                    ActionKind::ClockStart,
                    vec![t.id.clone(), clock.clone(), format!("until={deadline}")],
                    None,
                );
            }
            TriggerTarget::StopClock { clock } => {
                let elements = vec![t.id.clone(), clock.clone()];
                if self.state.clock(clock).is_some() {
                    self.state.clocks.insert(clock.clone(), None);
                    self.record(ActionKind::ClockStop, elements, None);
                } else {
                    self.record(ActionKind::TriggerFire, elements, None);
                }
            }
            TriggerTarget::Release { machine, all } => {
                let n = if *all {
                    self.state.stored(machine).len()
                } else {
                    1
                };
                let mut released = Vec::new();
                for _ in 0..n {
                    match self.state.take_first(machine, Slot::Storage) {
                        Some(th) => released.push(th),
                        None => break,
                    }
                }
                self.record(
                    ActionKind::TriggerFire,
                    vec![t.id.clone(), machine.clone()],
                    None,
                );
                for th in released {
                    let id = th.id;
                    self.state.put(machine, Slot::Release, th);
                    self.record(
                        ActionKind::Unpark,
                        vec![
                            Slot::Storage.element(machine),
                            Slot::Release.element(machine),
                        ],
                        Some(ThingRecord { id, detail: None }),
                    );
                    self.arrive(machine, Slot::Release, id);
                }
            }
        }
        Some(())
    }

    pub fn timeout(&mut self, clock: &str) {
        self.state.clocks.insert(clock.to_string(), None);
        self.record(ActionKind::Timeout, vec![clock.to_string()], None);
        self.enqueue(
            |src| matches!(src, TriggerSource::Timeout(c) if c == clock),
            None,
        );
        for g in &self.model.groups {
            if matches!(&g.gate, Some(GroupGate::Timeout(c)) if c == clock) {
                if let Some((st, recs)) = try_group(self.model, &self.state, g) {
                    self.state = st;
                    self.records.extend(recs);
                }
            }
        }
    }

    /// Places a new thing from the environment at `machine`'s Transfer-in or Create.
    pub fn inject(&mut self, machine: &str, stage: Stage, attrs: Attrs) -> ThingId {
        let thing: Thing = self.state.new_thing(kind_for(self.model, machine), attrs);
        let id = thing.id;
        let rec = ThingRecord {
            id,
            detail: Some((thing.kind.clone(), thing.attrs.clone())),
        };
        let slot = Slot::arriving(stage, true);
        self.state.put(machine, slot, thing);
        self.record(
            ActionKind::Injection,
            vec![slot.element(machine)],
            Some(rec),
        );
        self.arrive(machine, slot, id);
        id
    }
}
