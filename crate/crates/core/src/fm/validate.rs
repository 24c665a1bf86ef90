use std::collections::{BTreeMap, BTreeSet};

use super::guard::Expr;
use super::model::{FmModel, GroupGate, Position, Stage, StageRef, TriggerSource, TriggerTarget};
use crate::report::ValidationReport;

/// Intra-machine arcs allowed by the stage discipline.
pub const ADJACENCY: [(Stage, Stage); 6] = [
    (Stage::Transfer, Stage::Receive),
    (Stage::Receive, Stage::Process),
    (Stage::Receive, Stage::Release),
    (Stage::Process, Stage::Release),
    (Stage::Create, Stage::Release),
    (Stage::Release, Stage::Transfer),
];

/// Stages whose things may be parked into storage.
pub const PARK_FROM: [Stage; 3] = [Stage::Process, Stage::Receive, Stage::Create];

/// Stages stored things may be released into.
pub const UNPARK_TO: [Stage; 2] = [Stage::Release, Stage::Process];

pub fn is_legal_adjacency(from: Stage, to: Stage) -> bool {
    ADJACENCY.contains(&(from, to))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    /// Full stage discipline.
    Strict,
    /// Simplified diagrams: no adjacency or transfer-only rules, stage sets may be empty.
    Relaxed,
}

pub fn validate(model: &FmModel) -> ValidationReport {
    validate_with(model, Strictness::Strict)
}

pub fn validate_with(model: &FmModel, strictness: Strictness) -> ValidationReport {
    let mut r = ValidationReport::default();
    let strict = strictness == Strictness::Strict;

    let mut seen = BTreeSet::new();
    for id in model.declared_ids() {
        if !seen.insert(id) {
            r.push(id, "duplicate id", "id declared more than once");
        }
    }

    let spheres: BTreeSet<&str> = model.spheres.iter().map(String::as_str).collect();
    for s in &model.spheres {
        for parent in FmModel::sphere_chain(s) {
            if !spheres.contains(parent.as_str()) {
                r.push(
                    s,
                    "sphere forest",
                    format!("parent sphere `{parent}` is not declared"),
                );
            }
        }
    }

    for m in &model.machines {
        if !spheres.contains(m.sphere.as_str()) {
            r.push(
                &m.id,
                "unknown sphere",
                format!("sphere `{}` is not declared", m.sphere),
            );
        }
        if strict && m.stages.is_empty() {
            r.push(&m.id, "empty stages", "a machine needs at least one stage");
        }
        let mut kinds = BTreeSet::new();
        for s in &m.stages {
            if !kinds.insert(*s) {
                r.push(&m.id, "duplicate stage", format!("stage {s} listed twice"));
            }
        }
    }

    let has_stage = |s: &StageRef| {
        model
            .machine(&s.machine)
            .is_some_and(|m| m.has_stage(s.stage))
    };
    let storage_of = |id: &str| model.machine(id).is_some_and(|m| m.has_storage);

    for f in &model.flows {
        for end in [&f.from, &f.to] {
            if !has_stage(end) {
                r.push(&f.id, "flow endpoint", format!("`{end}` does not exist"));
            }
        }
        if f.is_inter_machine() {
            if strict && (f.from.stage != Stage::Transfer || f.to.stage != Stage::Transfer) {
                r.push(
                    &f.id,
                    "inter-machine transfer",
                    format!(
                        "`{}` -> `{}` must connect Transfer to Transfer",
                        f.from, f.to
                    ),
                );
            }
            if let (Some(a), Some(b)) =
                (model.machine(&f.from.machine), model.machine(&f.to.machine))
            {
                if a.thing_kind != "*" && !b.accepts_kind(&a.thing_kind) {
                    r.push(
                        &f.id,
                        "thing kind",
                        format!(
                            "`{}` handles {} but `{}` handles {}",
                            a.id, a.thing_kind, b.id, b.thing_kind
                        ),
                    );
                }
            }
        } else if strict && !is_legal_adjacency(f.from.stage, f.to.stage) {
            r.push(
                &f.id,
                "illegal stage adjacency",
                format!(
                    "{} -> {} is not a legal stage step",
                    f.from.stage, f.to.stage
                ),
            );
        }
    }

    for p in &model.parks {
        if !has_stage(&p.from) {
            r.push(&p.id, "park", format!("`{}` does not exist", p.from));
        }
        if !storage_of(&p.from.machine) {
            r.push(
                &p.id,
                "park",
                format!("machine `{}` has no storage", p.from.machine),
            );
        }
        if !PARK_FROM.contains(&p.from.stage) {
            r.push(
                &p.id,
                "park",
                format!("things cannot be parked from {}", p.from.stage),
            );
        }
    }
    for u in &model.unparks {
        if !has_stage(&u.to) {
            r.push(&u.id, "unpark", format!("`{}` does not exist", u.to));
        }
        if !storage_of(&u.to.machine) {
            r.push(
                &u.id,
                "unpark",
                format!("machine `{}` has no storage", u.to.machine),
            );
        }
        if !UNPARK_TO.contains(&u.to.stage) {
            r.push(
                &u.id,
                "unpark",
                format!("storage cannot release into {}", u.to.stage),
            );
        }
    }

    for t in &model.triggers {
        match &t.from {
            TriggerSource::Stage(s) if !has_stage(s) => {
                r.push(&t.id, "trigger source", format!("`{s}` does not exist"))
            }
            TriggerSource::Timeout(c) if model.clock(c).is_none() => {
                r.push(&t.id, "trigger source", format!("unknown clock `{c}`"))
            }
            TriggerSource::Machine(m) if model.machine(m).is_none() => {
                r.push(&t.id, "trigger source", format!("unknown machine `{m}`"))
            }
            _ => {}
        }
        match &t.to {
            TriggerTarget::Create { machine, attrs } => {
                if !has_stage(&StageRef::new(machine.clone(), Stage::Create)) {
                    r.push(
                        &t.id,
                        "trigger target",
                        format!("`{machine}.Create` does not exist"),
                    );
                }
                for (name, e) in attrs {
                    check_expr(model, &t.id, e, &mut r);
                    if e.static_type() == Some(super::guard::Ty::Bool) {
                        r.push(
                            &t.id,
                            "trigger target",
                            format!("attribute `{name}` cannot be boolean"),
                        );
                    }
                }
            }
            TriggerTarget::SetPower { machine, .. } => {
                if model.machine(machine).is_none() {
                    r.push(
                        &t.id,
                        "trigger target",
                        format!("unknown machine `{machine}`"),
                    );
                }
            }
            TriggerTarget::StartClock { clock, .. } | TriggerTarget::StopClock { clock } => {
                if model.clock(clock).is_none() {
                    r.push(&t.id, "trigger target", format!("unknown clock `{clock}`"));
                }
            }
            TriggerTarget::Release { machine, .. } => {
                if !storage_of(machine) {
                    r.push(
                        &t.id,
                        "trigger target",
                        format!("`{machine}` has no storage to release"),
                    );
                } else if !has_stage(&StageRef::new(machine.clone(), Stage::Release)) {
                    r.push(
                        &t.id,
                        "trigger target",
                        format!("`{machine}` has no Release stage"),
                    );
                }
            }
        }
        if let Some(g) = &t.guard {
            check_guard(model, &t.id, g, &mut r);
        }
    }

    for c in &model.clocks {
        if let Some(s) = &c.sphere {
            if !spheres.contains(s.as_str()) {
                r.push(
                    &c.id,
                    "unknown sphere",
                    format!("sphere `{s}` is not declared"),
                );
            }
        }
    }

    for (i, th) in model.things.iter().enumerate() {
        let label = format!("thing#{}", i + 1);
        match model.machine(&th.machine) {
            None => r.push(
                label,
                "initial thing",
                format!("unknown machine `{}`", th.machine),
            ),
            Some(m) => match th.position {
                Position::Storage if !m.has_storage => {
                    r.push(label, "initial thing", format!("`{}` has no storage", m.id))
                }
                Position::Stage(s) if !m.has_stage(s) => r.push(
                    label,
                    "initial thing",
                    format!("`{}.{s}` does not exist", m.id),
                ),
                _ => {}
            },
        }
    }

    validate_groups(model, &mut r);

    for l in &model.links {
        for end in [&l.from, &l.to] {
            if model.machine(end).is_none() {
                r.push(&l.id, "link endpoint", format!("unknown machine `{end}`"));
            }
        }
    }

    r
}

fn validate_groups(model: &FmModel, r: &mut ValidationReport) {
    for g in &model.groups {
        // leaving position -> number of group elements that leave it
        let mut exits: BTreeMap<String, usize> = BTreeMap::new();
        for mem in &g.members {
            if mem.count == 0 {
                r.push(
                    &g.id,
                    "group",
                    format!("`{}` has multiplicity 0", mem.element),
                );
            }
            let e = mem.element.as_str();
            if let Some(f) = model.flows.iter().find(|f| f.id == e) {
                *exits.entry(f.from.to_string()).or_default() += 1;
            } else if let Some(p) = model.parks.iter().find(|p| p.id == e) {
                *exits.entry(p.from.to_string()).or_default() += 1;
            } else if let Some(u) = model.unparks.iter().find(|u| u.id == e) {
                *exits
                    .entry(format!("{}.storage", u.to.machine))
                    .or_default() += 1;
            } else if model.trigger(e).is_none() {
                r.push(
                    &g.id,
                    "group",
                    format!("`{e}` is not a flow, park, unpark or trigger"),
                );
                continue;
            }
        }
        for (pos, n) in exits {
            if n > 1 {
                r.push(&g.id, "group", format!("{n} group elements leave `{pos}`"));
            }
        }
        match &g.gate {
            Some(GroupGate::Stage(s)) => {
                if !model
                    .machine(&s.machine)
                    .is_some_and(|m| m.has_stage(s.stage))
                {
                    r.push(&g.id, "group gate", format!("`{s}` does not exist"));
                }
            }
            Some(GroupGate::Timeout(c)) if model.clock(c).is_none() => {
                r.push(&g.id, "group gate", format!("unknown clock `{c}`"));
            }
            _ => {}
        }
        if let Some(guard) = &g.guard {
            check_guard(model, &g.id, guard, r);
        }
    }
}

fn check_expr(model: &FmModel, id: &str, e: &Expr, r: &mut ValidationReport) {
    for m in e.machine_refs() {
        if model.machine(m).is_none() {
            r.push(id, "guard reference", format!("unknown machine `{m}`"));
        }
    }
    for c in e.clock_refs() {
        if model.clock(c).is_none() {
            r.push(id, "guard reference", format!("unknown clock `{c}`"));
        }
    }
    for msg in e.type_errors() {
        r.push(id, "guard type", msg);
    }
}

pub(crate) fn check_guard(model: &FmModel, id: &str, e: &Expr, r: &mut ValidationReport) {
    check_expr(model, id, e, r);
    if let Some(t) = e.static_type() {
        if t != super::guard::Ty::Bool {
            r.push(id, "guard type", format!("guard `{e}` is not boolean"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fm::model::{FlowArc, Machine, Power};

    fn machine(id: &str, stages: &[Stage]) -> Machine {
        Machine {
            id: id.into(),
            sphere: "s".into(),
            thing_kind: "coin".into(),
            stages: stages.to_vec(),
            has_storage: false,
            initial_power: Power::On,
        }
    }

    #[test]
    fn empty_model_is_valid() {
        assert!(validate(&FmModel::default()).is_valid());
    }

    #[test]
    fn create_to_receive_is_illegal() {
        let m = FmModel {
            spheres: vec!["s".into()],
            machines: vec![machine("a", &[Stage::Create, Stage::Receive])],
            flows: vec![FlowArc {
                id: "f1".into(),
                from: StageRef::new("a", Stage::Create),
                to: StageRef::new("a", Stage::Receive),
                label: None,
            }],
            ..Default::default()
        };
        let report = validate(&m);
        assert_eq!(report.rules(), vec!["illegal stage adjacency"]);
        assert!(validate_with(&m, Strictness::Relaxed).is_valid());
    }

    #[test]
    fn inter_machine_arcs_are_transfer_only() {
        let m = FmModel {
            spheres: vec!["s".into()],
            machines: vec![
                machine("a", &[Stage::Release, Stage::Transfer]),
                machine("b", &[Stage::Transfer, Stage::Receive]),
            ],
            flows: vec![FlowArc {
                id: "f1".into(),
                from: StageRef::new("a", Stage::Release),
                to: StageRef::new("b", Stage::Receive),
                label: None,
            }],
            ..Default::default()
        };
        assert_eq!(validate(&m).rules(), vec!["inter-machine transfer"]);
    }

    #[test]
    fn every_table_entry_is_legal() {
        for s in Stage::ALL {
            for t in Stage::ALL {
                let expected = ADJACENCY.contains(&(s, t));
                assert_eq!(is_legal_adjacency(s, t), expected);
            }
        }
        assert!(!is_legal_adjacency(Stage::Process, Stage::Create));
    }
}
