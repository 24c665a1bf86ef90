//! Compilation of Petri nets into flowthing machine models.
//!
//! A place `p` becomes machine `P_p` whose stored things are its tokens. A
//! transition `t` becomes machine `T_t`; one firing is the atomic group `g_t`
//! that pulls the input things through `T_t` and creates the output things,
//! and the event `E_t` is anchored at that group.

use std::collections::BTreeSet;

use crate::events::{ControlEdge, ControlGraph, Event, EventSet, EventTrace};
use crate::fm::guard::{ArithOp, CmpOp, Expr};
use crate::fm::model::{
    Attrs, Clock, FlowArc, FmModel, Group, GroupGate, GroupMember, InitialThing, Machine, Park,
    Position, Power, Stage, StageRef, TriggerArc, TriggerSource, TriggerTarget, Unpark,
};
use crate::pn::{FiredKind, FiredRecord, Net, NetClass};

pub const SPHERE: &str = "net";
pub const VIRTUAL_START: &str = "start";
const BOOT: &str = "boot";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranslateError {
    #[error("invalid net:\n{0}")]
    InvalidNet(crate::report::ValidationReport),
    #[error("{0} nets need a different translation")]
    UnsupportedClass(NetClass),
    #[error("arc {from}->{to} has weight {weight} above the capacity {capacity} of `{place}`")]
    Unrepresentable {
        from: String,
        to: String,
        weight: u32,
        place: String,
        capacity: u32,
    },
    #[error("external transition `{0}` carries a delay")]
    ExternalDelay(String),
    #[error("unmapped transition `{0}`")]
    Unmapped(String),
    #[error("mapping is not a bijection at `{0}`")]
    NotBijective(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceMapping {
    pub place: String,
    pub machine: String,
    pub kind: String,
}

/// Where the environment injects the stimulus for an external transition name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalMapping {
    pub name: String,
    pub machine: String,
    pub stage: Option<Stage>,
    pub attrs: Attrs,
}

/// Correspondence between a net and an FM model.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventMapping {
    transitions: Vec<(String, String)>,
    pub places: Vec<PlaceMapping>,
    pub externals: Vec<ExternalMapping>,
}

impl EventMapping {
    /// Pairs of (transition, event); both sides must be unique.
    pub fn new(pairs: Vec<(String, String)>) -> Result<EventMapping, TranslateError> {
        let mut ts = BTreeSet::new();
        let mut es = BTreeSet::new();
        for (t, e) in &pairs {
            if !ts.insert(t.as_str()) {
                return Err(TranslateError::NotBijective(t.clone()));
            }
            if !es.insert(e.as_str()) {
                return Err(TranslateError::NotBijective(e.clone()));
            }
        }
        Ok(EventMapping {
            transitions: pairs,
            ..EventMapping::default()
        })
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.transitions
    }

    pub fn event_of(&self, transition: &str) -> Option<&str> {
        self.transitions
            .iter()
            .find(|(t, _)| t == transition)
            .map(|(_, e)| e.as_str())
    }

    pub fn transition_of(&self, event: &str) -> Option<&str> {
        self.transitions
            .iter()
            .find(|(_, e)| e == event)
            .map(|(t, _)| t.as_str())
    }

    pub fn external(&self, name: &str) -> Option<&ExternalMapping> {
        self.externals.iter().find(|x| x.name == name)
    }

    /// Every transition of the net has an event.
    pub fn check_total(&self, net: &Net) -> Result<(), TranslateError> {
        match net
            .transitions
            .iter()
            .find(|t| self.event_of(&t.id).is_none())
        {
            Some(t) => Err(TranslateError::Unmapped(t.id.clone())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Translation {
    pub model: FmModel,
    pub events: EventSet,
    pub control: ControlGraph,
    pub mapping: EventMapping,
}

pub fn place_machine(p: &str) -> String {
    format!("P_{p}")
}

pub fn transition_machine(t: &str) -> String {
    format!("T_{t}")
}

pub fn group_id(t: &str) -> String {
    format!("g_{t}")
}

pub fn event_id(t: &str) -> String {
    format!("E_{t}")
}

fn external_machine(name: &str) -> String {
    format!("X_{name}")
}

fn clock_id(t: &str) -> String {
    format!("C_{t}")
}

fn sref(m: &str, s: Stage) -> StageRef {
    StageRef::new(m, s)
}

fn count(m: &str) -> Expr {
    Expr::Count(m.to_string())
}

fn all(parts: Vec<Expr>) -> Option<Expr> {
    parts.into_iter().reduce(Expr::and)
}

fn weight_into(net: &Net, t: &str, p: &str) -> i64 {
    net.inputs(t)
        .filter(|(q, _)| *q == p)
        .map(|(_, w)| i64::from(w))
        .sum()
}

/// Capacity and contact conditions on the outputs of `t`, over the marking
/// the FM model currently stores.
fn output_conditions(net: &Net, t: &str) -> Vec<Expr> {
    let contact = net.uses_contact_rule();
    let mut parts = Vec::new();
    for (q, w) in net.outputs(t) {
        let here = count(&place_machine(q));
        let win = weight_into(net, t, q);
        if let Some(cap) = net.place(q).and_then(|p| p.capacity) {
            let after = Expr::Arith(
                ArithOp::Sub,
                Box::new(Expr::Arith(
                    ArithOp::Add,
                    Box::new(here.clone()),
                    Box::new(Expr::Int(i64::from(w))),
                )),
                Box::new(Expr::Int(win)),
            );
            parts.push(Expr::cmp(CmpOp::Le, after, Expr::Int(i64::from(cap))));
        }
        if contact {
            parts.push(Expr::cmp(CmpOp::Eq, here, Expr::Int(win)));
        }
    }
    parts
}

/// `t` is enabled at the marking the FM model currently stores.
fn enabled_expr(net: &Net, t: &str) -> Expr {
    let mut parts: Vec<Expr> = net
        .inputs(t)
        .map(|(p, w)| Expr::cmp(CmpOp::Ge, count(&place_machine(p)), Expr::Int(i64::from(w))))
        .collect();
    parts.extend(output_conditions(net, t));
    all(parts).unwrap_or(Expr::Bool(true))
}

fn check_representable(net: &Net) -> Result<(), TranslateError> {
    let report = crate::pn::validate_net(net);
    if !report.is_valid() {
        return Err(TranslateError::InvalidNet(report));
    }
    for a in &net.arcs {
        let Some(place) = net.place(&a.to) else {
            continue;
        };
        if let Some(cap) = place.capacity.filter(|&c| a.weight > c) {
            return Err(TranslateError::Unrepresentable {
                from: a.from.clone(),
                to: a.to.clone(),
                weight: a.weight,
                place: place.id.clone(),
                capacity: cap,
            });
        }
    }
    Ok(())
}

struct Builder<'n> {
    net: &'n Net,
    model: FmModel,
    mapping: EventMapping,
}

impl<'n> Builder<'n> {
    fn new(net: &'n Net) -> Self {
        Builder {
            net,
            model: FmModel::default(),
            mapping: EventMapping::default(),
        }
    }

    fn machine(&mut self, id: String, kind: &str, stages: Vec<Stage>, storage: bool) {
        self.model.machines.push(Machine {
            id,
            sphere: SPHERE.to_string(),
            thing_kind: kind.to_string(),
            stages,
            has_storage: storage,
            initial_power: Power::On,
        });
    }

    fn flow(&mut self, id: String, from: StageRef, to: StageRef) -> GroupMember {
        self.model.flows.push(FlowArc {
            id: id.clone(),
            from,
            to,
            label: None,
        });
        GroupMember {
            element: id,
            count: 1,
        }
    }

    fn trigger(
        &mut self,
        id: String,
        from: TriggerSource,
        to: TriggerTarget,
        guard: Option<Expr>,
    ) -> GroupMember {
        self.model.triggers.push(TriggerArc {
            id: id.clone(),
            from,
            to,
            guard,
        });
        GroupMember {
            element: id,
            count: 1,
        }
    }

    fn places(&mut self) {
        if !self.net.places.is_empty() || !self.net.transitions.is_empty() {
            self.model.spheres.push(SPHERE.to_string());
        }
        for p in &self.net.places {
            let m = place_machine(&p.id);
            let stages = vec![
                Stage::Create,
                Stage::Receive,
                Stage::Release,
                Stage::Transfer,
            ];
            self.machine(m.clone(), &p.id, stages, true);
            for _ in 0..self.net.initial.get(&p.id).copied().unwrap_or(0) {
                self.model.things.push(InitialThing {
                    machine: m.clone(),
                    position: Position::Storage,
                    attrs: Attrs::new(),
                });
            }
            self.mapping.places.push(PlaceMapping {
                place: p.id.clone(),
                machine: m,
                kind: p.id.clone(),
            });
        }
    }

    /// Consumption and creation elements of one firing of `t`.
    fn firing(&mut self, t: &str, extra_stages: &[Stage]) -> (Vec<GroupMember>, Vec<GroupMember>) {
        let net = self.net;
        let tm = transition_machine(t);
        let mut stages = extra_stages.to_vec();
        stages.extend([Stage::Transfer, Stage::Receive, Stage::Process]);
        self.machine(tm.clone(), "*", stages, false);

        let mut consume = Vec::new();
        let mut total_in = 0;
        for (p, w) in net.inputs(t) {
            let pm = place_machine(p);
            self.model.unparks.push(Unpark {
                id: format!("u_{p}_{t}"),
                to: sref(&pm, Stage::Release),
            });
            consume.push(GroupMember {
                element: format!("u_{p}_{t}"),
                count: w,
            });
            let mut r = self.flow(
                format!("r_{p}_{t}"),
                sref(&pm, Stage::Release),
                sref(&pm, Stage::Transfer),
            );
            r.count = w;
            let mut i = self.flow(
                format!("i_{p}_{t}"),
                sref(&pm, Stage::Transfer),
                sref(&tm, Stage::Transfer),
            );
            i.count = w;
            consume.extend([r, i]);
            total_in += w;
        }
        if total_in > 0 {
            let mut x = self.flow(
                format!("x_{t}"),
                sref(&tm, Stage::Transfer),
                sref(&tm, Stage::Receive),
            );
            let mut e = self.flow(
                format!("e_{t}"),
                sref(&tm, Stage::Receive),
                sref(&tm, Stage::Process),
            );
            x.count = total_in;
            e.count = total_in;
            consume.extend([x, e]);
        }

        let mut create = Vec::new();
        for (q, w) in net.outputs(t) {
            let qm = place_machine(q);
            let mut o = self.trigger(
                format!("o_{t}_{q}"),
                TriggerSource::Stage(sref(&tm, Stage::Process)),
                TriggerTarget::Create {
                    machine: qm.clone(),
                    attrs: Vec::new(),
                },
                None,
            );
            o.count = w;
            self.model.parks.push(Park {
                id: format!("k_{t}_{q}"),
                from: sref(&qm, Stage::Create),
            });
            create.extend([
                o,
                GroupMember {
                    element: format!("k_{t}_{q}"),
                    count: w,
                },
            ]);
        }
        (consume, create)
    }

    fn group(
        &mut self,
        t: &str,
        members: Vec<GroupMember>,
        gate: Option<GroupGate>,
        guard: Option<Expr>,
    ) {
        self.model.groups.push(Group {
            id: group_id(t),
            members,
            gate,
            guard,
        });
        self.mapping.transitions.push((t.to_string(), event_id(t)));
    }

    fn events(&self) -> (EventSet, ControlGraph) {
        let mut events = Vec::new();
        for t in &self.net.transitions {
            let g = group_id(&t.id);
            let mut region: BTreeSet<String> = self
                .model
                .group(&g)
                .map(|g| g.members.iter().map(|m| m.element.clone()).collect())
                .unwrap_or_default();
            region.insert(g.clone());
            events.push(Event {
                id: event_id(&t.id),
                region,
                anchor: g,
                window: None,
            });
        }
        let events = EventSet::new(events).expect("generated ids are unique");
        let mut edges = Vec::new();
        for a in std::iter::once(VIRTUAL_START.to_string())
            .chain(events.ids().into_iter().map(str::to_string))
        {
            for b in events.ids() {
                edges.push(ControlEdge {
                    from: a.clone(),
                    to: b.to_string(),
                    guard: None,
                });
            }
        }
        let control = ControlGraph::new(&events, edges, VIRTUAL_START)
            .expect("complete graph over declared events");
        (events, control)
    }

    fn finish(self) -> Translation {
        let (events, control) = self.events();
        Translation {
            model: self.model,
            events,
            control,
            mapping: self.mapping,
        }
    }
}

/// Untimed translation of an elementary or place/transition net.
pub fn translate(net: &Net) -> Result<Translation, TranslateError> {
    check_representable(net)?;
    let class = net.class();
    if class == NetClass::Timed {
        return Err(TranslateError::UnsupportedClass(class));
    }
    let mut b = Builder::new(net);
    b.places();
    for t in &net.transitions {
        let (mut members, create) = b.firing(&t.id, &[]);
        members.extend(create);
        let guard = all(output_conditions(net, &t.id));
        b.group(&t.id, members, None, guard);
    }
    Ok(b.finish())
}

/// Timed translation. Each delayed internal transition gets a clock that
/// every firing starts or stops as its enabling changes; its group runs on
/// the clock's timeout. External transitions fire when a stimulus arrives at
/// the Create stage of `X_<name>`, and stimuli that cannot fire are parked.
pub fn translate_timed(net: &Net) -> Result<Translation, TranslateError> {
    check_representable(net)?;
    if let Some(t) = net
        .transitions
        .iter()
        .find(|t| t.external && t.delay.is_some())
    {
        return Err(TranslateError::ExternalDelay(t.id.clone()));
    }
    if net
        .transitions
        .iter()
        .all(|t| !t.external && t.delay.is_none())
    {
        return translate(net);
    }

    let timed: Vec<(String, u64)> = net
        .transitions
        .iter()
        .filter(|t| !t.external)
        .filter_map(|t| t.delay.map(|d| (t.id.clone(), d)))
        .collect();
    let mut b = Builder::new(net);
    b.places();
    for (t, _) in &timed {
        b.model.clocks.push(Clock {
            id: clock_id(t),
            sphere: Some(SPHERE.to_string()),
        });
    }

    // Starts the clocks of transitions enabled in the initial marking.
    if !timed.is_empty() {
        b.machine(BOOT.to_string(), "*", vec![Stage::Create], true);
        b.model.things.push(InitialThing {
            machine: BOOT.to_string(),
            position: Position::Stage(Stage::Create),
            attrs: Attrs::new(),
        });
        b.model.parks.push(Park {
            id: format!("{BOOT}_k"),
            from: sref(BOOT, Stage::Create),
        });
        let mut members = vec![GroupMember {
            element: format!("{BOOT}_k"),
            count: 1,
        }];
        for (u, d) in &timed {
            members.push(b.trigger(
                format!("{BOOT}_start_{u}"),
                TriggerSource::Stage(sref(BOOT, Stage::Create)),
                TriggerTarget::StartClock {
                    clock: clock_id(u),
                    duration: *d,
                },
                Some(enabled_expr(net, u)),
            ));
        }
        b.model.groups.push(Group {
            id: group_id(BOOT),
            members,
            gate: Some(GroupGate::Stage(sref(BOOT, Stage::Create))),
            guard: None,
        });
    }

    let mut names: Vec<String> = Vec::new();
    for t in net.transitions.iter().filter(|t| t.external) {
        let n = t.label.clone().unwrap_or_else(|| t.id.clone());
        if !names.contains(&n) {
            names.push(n);
        }
    }
    for n in &names {
        let xm = external_machine(n);
        b.machine(xm.clone(), "*", vec![Stage::Create], true);
        b.mapping.externals.push(ExternalMapping {
            name: n.clone(),
            machine: xm,
            stage: Some(Stage::Create),
            attrs: Attrs::new(),
        });
    }

    let order = net
        .transitions
        .iter()
        .filter(|t| t.external)
        .chain(net.transitions.iter().filter(|t| !t.external));
    let mut ext_end = b.model.groups.len();
    for t in order {
        let tp = sref(&transition_machine(&t.id), Stage::Process);
        let (mut members, create) = b.firing(&t.id, &[]);
        // Clocks of transitions disabled by the consumption restart.
        for (u, _) in &timed {
            members.push(b.trigger(
                format!("stop1_{}_{u}", t.id),
                TriggerSource::Stage(tp.clone()),
                TriggerTarget::StopClock { clock: clock_id(u) },
                Some(Expr::Not(Box::new(enabled_expr(net, u)))),
            ));
        }
        members.extend(create);
        for (u, d) in &timed {
            let cond = Expr::and(
                enabled_expr(net, u),
                Expr::Not(Box::new(Expr::Active(clock_id(u)))),
            );
            members.push(b.trigger(
                format!("start_{}_{u}", t.id),
                TriggerSource::Stage(tp.clone()),
                TriggerTarget::StartClock {
                    clock: clock_id(u),
                    duration: *d,
                },
                Some(cond),
            ));
            members.push(b.trigger(
                format!("stop2_{}_{u}", t.id),
                TriggerSource::Stage(tp.clone()),
                TriggerTarget::StopClock { clock: clock_id(u) },
                Some(Expr::Not(Box::new(enabled_expr(net, u)))),
            ));
        }
        let gate = if t.external {
            let n = t.label.clone().unwrap_or_else(|| t.id.clone());
            // the firing uses up its stimulus
            let take = format!("take_{}", t.id);
            b.model.parks.push(Park {
                id: take.clone(),
                from: sref(&external_machine(&n), Stage::Create),
            });
            members.insert(
                0,
                GroupMember {
                    element: take,
                    count: 1,
                },
            );
            Some(GroupGate::Stage(sref(&external_machine(&n), Stage::Create)))
        } else if t.delay.is_some() {
            Some(GroupGate::Timeout(clock_id(&t.id)))
        } else {
            None
        };
        b.group(&t.id, members, gate, all(output_conditions(net, &t.id)));
        if t.external {
            ext_end = b.model.groups.len();
        }
    }

    // A stimulus no matching transition can take is parked, ahead of any
    // internal transition.
    for n in names.iter().rev() {
        let xm = external_machine(n);
        let park = format!("drop_{n}");
        b.model.parks.push(Park {
            id: park.clone(),
            from: sref(&xm, Stage::Create),
        });
        let takers: Vec<Expr> = net
            .transitions
            .iter()
            .filter(|t| t.external && t.label.as_ref().unwrap_or(&t.id) == n)
            .map(|t| enabled_expr(net, &t.id))
            .collect();
        let any = takers
            .into_iter()
            .reduce(|a, c| Expr::Or(Box::new(a), Box::new(c)))
            .unwrap_or(Expr::Bool(false));
        b.model.groups.insert(
            ext_end,
            Group {
                id: format!("g_drop_{n}"),
                members: vec![GroupMember {
                    element: park,
                    count: 1,
                }],
                gate: Some(GroupGate::Stage(sref(&xm, Stage::Create))),
                guard: Some(Expr::Not(Box::new(any))),
            },
        );
    }
    Ok(b.finish())
}

/// Renames fired transitions to their events, keeping order and times.
pub fn map_trace(
    run: &[FiredRecord],
    mapping: &EventMapping,
) -> Result<EventTrace, TranslateError> {
    let mut out = EventTrace::default();
    for r in run.iter().filter(|r| r.kind == FiredKind::Fired) {
        let e = mapping
            .event_of(&r.transition)
            .ok_or_else(|| TranslateError::Unmapped(r.transition.clone()))?;
        out.occurrences.push((e.to_string(), r.time));
    }
    Ok(out)
}
