//! DOT output for models, nets and state graphs.

use std::fmt::Write as _;

use crate::fm::model::{FmModel, Machine, TriggerSource, TriggerTarget};
use crate::fm::{simplify, SimplifyLevel};
use crate::graph::StateGraph;
use crate::pn::Net;

fn q(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Node standing for a whole machine: its first stage, else its storage.
fn anchor(m: &Machine) -> String {
    match m.stages.first() {
        Some(s) => format!("{}.{s}", m.id),
        None if m.has_storage => format!("{}.storage", m.id),
        None => m.id.clone(),
    }
}

fn machine_anchor(model: &FmModel, id: &str) -> String {
    model
        .machine(id)
        .map(anchor)
        .unwrap_or_else(|| id.to_string())
}

fn machine_cluster(out: &mut String, m: &Machine, indent: &str) {
    let _ = writeln!(
        out,
        "{indent}subgraph {} {{",
        q(&format!("cluster_m_{}", m.id))
    );
    let _ = writeln!(out, "{indent}  label={};", q(&m.id));
    for s in &m.stages {
        let _ = writeln!(
            out,
            "{indent}  {} [label={}];",
            q(&format!("{}.{s}", m.id)),
            q(s.name())
        );
    }
    if m.has_storage {
        let _ = writeln!(
            out,
            "{indent}  {} [label=\"storage\", shape=cylinder];",
            q(&format!("{}.storage", m.id))
        );
    }
    if m.stages.is_empty() && !m.has_storage {
        let _ = writeln!(
            out,
            "{indent}  {} [label={}, shape=point];",
            q(&m.id),
            q(&m.id)
        );
    }
    let _ = writeln!(out, "{indent}}}");
}

fn sphere_cluster(out: &mut String, model: &FmModel, path: &str, depth: usize) {
    let indent = "  ".repeat(depth);
    let _ = writeln!(
        out,
        "{indent}subgraph {} {{",
        q(&format!("cluster_s_{path}"))
    );
    let name = path.rsplit('/').next().unwrap_or(path);
    let _ = writeln!(out, "{indent}  label={};", q(name));
    for m in model.machines_in(path) {
        machine_cluster(out, m, &format!("{indent}  "));
    }
    for c in model
        .clocks
        .iter()
        .filter(|c| c.sphere.as_deref() == Some(path))
    {
        let _ = writeln!(out, "{indent}  {} [shape=ellipse];", q(&c.id));
    }
    for child in model.sphere_children(path) {
        sphere_cluster(out, model, child, depth + 1);
    }
    let _ = writeln!(out, "{indent}}}");
}

/// Machines as clusters nested in their spheres; triggers are the only
/// dashed edges.
pub fn render_fm(model: &FmModel, level: SimplifyLevel) -> String {
    let model = simplify(model, level);
    let mut out = String::from("digraph fm {\n  compound=true;\n  node [shape=box];\n");
    for root in model.sphere_children("") {
        sphere_cluster(&mut out, &model, root, 1);
    }
    for m in model
        .machines
        .iter()
        .filter(|m| !model.spheres.contains(&m.sphere))
    {
        machine_cluster(&mut out, m, "  ");
    }
    for c in &model.clocks {
        let inside = c.sphere.as_ref().is_some_and(|s| model.spheres.contains(s));
        if !inside {
            let _ = writeln!(out, "  {} [shape=ellipse];", q(&c.id));
        }
    }
    for f in &model.flows {
        let _ = writeln!(
            out,
            "  {} -> {} [label={}];",
            q(&f.from.to_string()),
            q(&f.to.to_string()),
            q(&f.id)
        );
    }
    for p in &model.parks {
        let _ = writeln!(
            out,
            "  {} -> {} [style=dotted];",
            q(&p.from.to_string()),
            q(&format!("{}.storage", p.from.machine))
        );
    }
    for u in &model.unparks {
        let _ = writeln!(
            out,
            "  {} -> {} [style=dotted];",
            q(&format!("{}.storage", u.to.machine)),
            q(&u.to.to_string())
        );
    }
    for t in &model.triggers {
        let from = match &t.from {
            TriggerSource::Stage(s) => s.to_string(),
            TriggerSource::Timeout(c) => c.clone(),
            TriggerSource::Machine(m) => machine_anchor(&model, m),
        };
        let to = match &t.to {
            TriggerTarget::Create { machine, .. } => match model.machine(machine) {
                Some(m) if m.has_stage(crate::fm::Stage::Create) => format!("{machine}.Create"),
                _ => machine_anchor(&model, machine),
            },
            TriggerTarget::SetPower { machine, .. } | TriggerTarget::Release { machine, .. } => {
                machine_anchor(&model, machine)
            }
            TriggerTarget::StartClock { clock, .. } | TriggerTarget::StopClock { clock } => {
                clock.clone()
            }
        };
        let _ = writeln!(
            out,
            "  {} -> {} [style=dashed, label={}];",
            q(&from),
            q(&to),
            q(&t.id)
        );
    }
    for l in &model.links {
        let _ = writeln!(
            out,
            "  {} -> {} [style=bold, label={}];",
            q(&machine_anchor(&model, &l.from)),
            q(&machine_anchor(&model, &l.to)),
            q(&l.id)
        );
    }
    out.push_str("}\n");
    out
}

/// Places as circles, transitions as boxes.
pub fn render_net(net: &Net) -> String {
    let mut out = String::from("digraph net {\n");
    for p in &net.places {
        let tokens = net.initial.get(&p.id).copied().unwrap_or(0);
        let label = if tokens > 0 {
            format!("{} ({tokens})", p.id)
        } else {
            p.id.clone()
        };
        let _ = writeln!(out, "  {} [shape=circle, label={}];", q(&p.id), q(&label));
    }
    for t in &net.transitions {
        let _ = writeln!(out, "  {} [shape=box];", q(&t.id));
    }
    for a in &net.arcs {
        if a.weight == 1 {
            let _ = writeln!(out, "  {} -> {};", q(&a.from), q(&a.to));
        } else {
            let _ = writeln!(
                out,
                "  {} -> {} [label=\"{}\"];",
                q(&a.from),
                q(&a.to),
                a.weight
            );
        }
    }
    out.push_str("}\n");
    out
}

/// Nodes are numbered in exploration order; the initial node is doubled.
pub fn render_graph<N, L>(
    g: &StateGraph<N, L>,
    node: impl Fn(&N) -> String,
    edge: impl Fn(&L) -> String,
) -> String {
    let mut out = String::from("digraph states {\n");
    for (i, n) in g.nodes.iter().enumerate() {
        let shape = if i == g.initial {
            "doublecircle"
        } else {
            "circle"
        };
        let style = if g.expanded[i] { "" } else { ", style=dashed" };
        let _ = writeln!(out, "  s{i} [shape={shape}, label={}{style}];", q(&node(n)));
    }
    for e in &g.edges {
        let _ = writeln!(
            out,
            "  s{} -> s{} [label={}];",
            e.from,
            e.to,
            q(&edge(&e.label))
        );
    }
    out.push_str("}\n");
    out
}
