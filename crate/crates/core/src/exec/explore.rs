//! Breadth-first closure over all interleavings of an untimed model.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::fm::model::{FmModel, GroupGate, Stage, TriggerTarget};
use crate::graph::{Edge, StateGraph};

use super::record::format_attrs;
use super::state::{init_state, ExecState, Slot};
use super::step::{enabled_actions, source_slot, step};
use super::ExecError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FmNode {
    pub key: String,
    pub state: ExecState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FmEdge {
    pub action: String,
    /// Elements touched by the records of this action, in record order.
    pub subjects: Vec<String>,
}

pub type FmStateGraph = StateGraph<FmNode, FmEdge>;

/// Slots from which a thing can still move or be observed by an expression.
///
/// Things anywhere else can never influence future behaviour and are left
/// out of canonical state keys, which keeps sink-heavy models finite.
#[derive(Debug, Clone)]
pub struct Liveness {
    live: BTreeSet<(String, Slot)>,
    observed: BTreeSet<String>,
}

impl Liveness {
    pub fn of(model: &FmModel) -> Self {
        let mut live = BTreeSet::new();
        for f in &model.flows {
            live.insert((f.from.machine.clone(), source_slot(f)));
        }
        for p in &model.parks {
            live.insert((p.from.machine.clone(), Slot::arriving(p.from.stage, false)));
        }
        for u in &model.unparks {
            live.insert((u.to.machine.clone(), Slot::Storage));
        }
        for t in &model.triggers {
            if let TriggerTarget::Release { machine, .. } = &t.to {
                live.insert((machine.clone(), Slot::Storage));
            }
        }
        for g in &model.groups {
            if let Some(GroupGate::Stage(s)) = &g.gate {
                live.insert((s.machine.clone(), Slot::arriving(s.stage, true)));
            }
        }
        for m in &model.machines {
            if m.has_stage(Stage::Transfer) {
                live.insert((m.id.clone(), Slot::TransferOut));
            }
        }
        let mut observed = BTreeSet::new();
        let mut note = |e: &crate::fm::guard::Expr| {
            observed.extend(e.machine_refs().into_iter().map(str::to_string));
        };
        for t in &model.triggers {
            if let Some(g) = &t.guard {
                note(g);
            }
            if let TriggerTarget::Create { attrs, .. } = &t.to {
                attrs.iter().for_each(|(_, e)| note(e));
            }
        }
        for g in &model.groups {
            if let Some(e) = &g.guard {
                note(e);
            }
        }
        Liveness { live, observed }
    }

    pub fn is_live(&self, machine: &str, slot: Slot) -> bool {
        self.observed.contains(machine) || self.live.contains(&(machine.to_string(), slot))
    }
}

/// Canonical key: things sorted per slot and identified by kind and
/// attributes only, inert things dropped, time ignored.
pub fn canonical_key(state: &ExecState, live: &Liveness) -> String {
    let mut key = String::new();
    for ((m, slot), things) in &state.placements {
        if !live.is_live(m, *slot) {
            continue;
        }
        let mut items: Vec<String> = things
            .iter()
            .map(|t| format!("{}{}", t.kind, format_attrs(&t.attrs)))
            .collect();
        items.sort();
        key.push_str(&format!("{m}:{slot:?}=[{}];", items.join(",")));
    }
    for (m, p) in &state.power {
        key.push_str(&format!("{m}:{p};"));
    }
    for p in &state.pending {
        key.push_str(&format!("!{}{};", p.trigger, format_attrs(&p.attrs)));
    }
    key
}

pub fn explore(
    model: &FmModel,
    max_depth: usize,
    max_states: usize,
) -> Result<FmStateGraph, ExecError> {
    let start = init_state(model)?;
    explore_from(model, start, max_depth, max_states)
}

/// Explores from an arbitrary start state, e.g. one with injected things.
pub fn explore_from(
    model: &FmModel,
    start: ExecState,
    max_depth: usize,
    max_states: usize,
) -> Result<FmStateGraph, ExecError> {
    if !model.clocks.is_empty() {
        return Err(ExecError::Timed);
    }
    let live = Liveness::of(model);
    let key = canonical_key(&start, &live);
    let mut graph = StateGraph::new(FmNode {
        key: key.clone(),
        state: start,
    });
    let mut index = HashMap::from([(key, 0usize)]);
    let mut queue = VecDeque::from([(0usize, 0usize)]);

    while let Some((id, depth)) = queue.pop_front() {
        if depth >= max_depth {
            graph.truncated = true;
            continue;
        }
        let state = graph.nodes[id].state.clone();
        let mut complete = true;
        for action in enabled_actions(&state, model) {
            let (next, records) = step(&state, model, &action).expect("enabled action applies");
            let k = canonical_key(&next, &live);
            let to = match index.get(&k) {
                Some(&to) => to,
                None if graph.node_count() >= max_states => {
                    complete = false;
                    graph.truncated = true;
                    continue;
                }
                None => {
                    let to = graph.add_node(FmNode {
                        key: k.clone(),
                        state: next,
                    });
                    index.insert(k, to);
                    queue.push_back((to, depth + 1));
                    to
                }
            };
            graph.edges.push(Edge {
                from: id,
                label: FmEdge {
                    action: action.to_string(),
                    subjects: records.into_iter().flat_map(|r| r.elements).collect(),
                },
                to,
            });
        }
        graph.expanded[id] = complete;
    }
    Ok(graph)
}
