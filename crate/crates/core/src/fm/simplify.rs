use std::collections::BTreeSet;

use super::guard::Expr;
use super::model::{FmModel, GroupGate, Link, Position, Stage, TriggerSource, TriggerTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimplifyLevel {
    Full,
    NoTransport,
    CreateProcessOnly,
}

impl SimplifyLevel {
    pub fn parse(s: &str) -> Option<SimplifyLevel> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "full" => Some(SimplifyLevel::Full),
            "notransport" => Some(SimplifyLevel::NoTransport),
            "createprocessonly" | "createprocess" | "cp" => Some(SimplifyLevel::CreateProcessOnly),
            _ => None,
        }
    }
}

/// Coarser views of a model. The result only validates under relaxed rules.
pub fn simplify(model: &FmModel, level: SimplifyLevel) -> FmModel {
    match level {
        SimplifyLevel::Full => model.clone(),
        SimplifyLevel::NoTransport => drop_transport(model),
        SimplifyLevel::CreateProcessOnly => drop_passive(&drop_transport(model)),
    }
}

fn drop_transport(model: &FmModel) -> FmModel {
    let mut out = model.clone();
    for m in &mut out.machines {
        m.stages.retain(|s| !s.is_transport());
    }
    let mut links = Vec::new();
    out.flows.retain(|f| {
        if f.is_inter_machine() {
            links.push(Link {
                id: f.id.clone(),
                from: f.from.machine.clone(),
                to: f.to.machine.clone(),
            });
        }
        !f.from.stage.is_transport() && !f.to.stage.is_transport()
    });
    out.links.extend(links);
    out.parks.retain(|p| !p.from.stage.is_transport());
    out.unparks.retain(|u| !u.to.stage.is_transport());
    for t in &mut out.triggers {
        if let TriggerSource::Stage(s) = &t.from {
            if s.stage.is_transport() {
                t.from = TriggerSource::Machine(s.machine.clone());
            }
        }
    }
    out.things.retain(|t| match t.position {
        Position::Stage(s) => !s.is_transport(),
        Position::Storage => true,
    });
    prune_groups(&mut out);
    out
}

fn drop_passive(model: &FmModel) -> FmModel {
    let mut out = model.clone();
    let gone: BTreeSet<String> = out
        .machines
        .iter()
        .filter(|m| !m.has_stage(Stage::Create) && !m.has_stage(Stage::Process))
        .map(|m| m.id.clone())
        .collect();
    if gone.is_empty() {
        return out;
    }
    out.machines.retain(|m| !gone.contains(&m.id));

    // Splice each removed machine out of the link graph, one at a time.
    for x in &gone {
        let (through, rest): (Vec<Link>, Vec<Link>) = out
            .links
            .drain(..)
            .partition(|l| &l.from == x || &l.to == x);
        out.links = rest;
        for a in through.iter().filter(|l| &l.to == x) {
            for b in through.iter().filter(|l| &l.from == x) {
                if a.from != b.to && &a.from != x {
                    out.links.push(Link {
                        id: format!("{}+{}", a.id, b.id),
                        from: a.from.clone(),
                        to: b.to.clone(),
                    });
                }
            }
        }
    }

    let refers = |e: &Expr| e.machine_refs().iter().any(|m| gone.contains(*m));
    out.flows
        .retain(|f| !gone.contains(&f.from.machine) && !gone.contains(&f.to.machine));
    out.parks.retain(|p| !gone.contains(&p.from.machine));
    out.unparks.retain(|u| !gone.contains(&u.to.machine));
    out.triggers.retain(|t| {
        let source_gone = match &t.from {
            TriggerSource::Stage(s) => gone.contains(&s.machine),
            TriggerSource::Machine(m) => gone.contains(m),
            TriggerSource::Timeout(_) => false,
        };
        let target_gone = match &t.to {
            TriggerTarget::Create { machine, attrs } => {
                gone.contains(machine) || attrs.iter().any(|(_, e)| refers(e))
            }
            TriggerTarget::SetPower { machine, .. } | TriggerTarget::Release { machine, .. } => {
                gone.contains(machine)
            }
            TriggerTarget::StartClock { .. } | TriggerTarget::StopClock { .. } => false,
        };
        !source_gone && !target_gone && !t.guard.as_ref().is_some_and(refers)
    });
    out.things.retain(|t| !gone.contains(&t.machine));
    for g in &mut out.groups {
        if g.guard.as_ref().is_some_and(refers) {
            g.guard = None;
        }
    }
    prune_groups(&mut out);
    out
}

/// Drops group members that no longer exist, then empty groups.
fn prune_groups(out: &mut FmModel) {
    let ids: BTreeSet<String> = out
        .flows
        .iter()
        .map(|f| f.id.clone())
        .chain(out.parks.iter().map(|p| p.id.clone()))
        .chain(out.unparks.iter().map(|u| u.id.clone()))
        .chain(out.triggers.iter().map(|t| t.id.clone()))
        .collect();
    let machines: BTreeSet<String> = out.machines.iter().map(|m| m.id.clone()).collect();
    for g in &mut out.groups {
        g.members.retain(|m| ids.contains(&m.element));
        if let Some(GroupGate::Stage(s)) = &g.gate {
            let keep = machines.contains(&s.machine) && !s.stage.is_transport();
            if !keep {
                g.gate = None;
            }
        }
    }
    out.groups.retain(|g| !g.members.is_empty());
}
