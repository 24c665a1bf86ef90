use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::graph::{Edge, Language, StateGraph};

use super::model::{Marking, Net};

pub type PnStateGraph = StateGraph<Marking, String>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("transition `{transition}` is not enabled at {marking}")]
pub struct FireError {
    pub transition: String,
    pub marking: Marking,
}

fn can_fire(net: &Net, contact: bool, m: &Marking, t: &str) -> bool {
    if net.inputs(t).any(|(p, w)| m.get(p) < w) {
        return false;
    }
    let mut after = m.clone();
    for (p, w) in net.inputs(t) {
        after.set(p, after.get(p) - w);
    }
    if contact && net.outputs(t).any(|(p, _)| after.get(p) > 0) {
        return false;
    }
    for (p, w) in net.outputs(t) {
        after.set(p, after.get(p) + w);
    }
    net.outputs(t).all(|(p, _)| {
        net.place(p)
            .and_then(|pl| pl.capacity)
            .is_none_or(|cap| after.get(p) <= cap)
    })
}

/// Enabled transitions in declaration order.
pub fn enabled<'a>(net: &'a Net, m: &Marking) -> Vec<&'a str> {
    let contact = net.uses_contact_rule();
    net.transitions
        .iter()
        .map(|t| t.id.as_str())
        .filter(|t| can_fire(net, contact, m, t))
        .collect()
}

pub fn is_enabled(net: &Net, m: &Marking, t: &str) -> bool {
    net.transition(t).is_some() && can_fire(net, net.uses_contact_rule(), m, t)
}

/// Marking after removing the inputs of `t`, before adding its outputs.
pub fn consume(net: &Net, m: &Marking, t: &str) -> Marking {
    let mut out = m.clone();
    for (p, w) in net.inputs(t) {
        out.set(p, out.get(p).saturating_sub(w));
    }
    out
}

pub fn fire(net: &Net, m: &Marking, t: &str) -> Result<Marking, FireError> {
    if !is_enabled(net, m, t) {
        return Err(FireError {
            transition: t.to_string(),
            marking: m.clone(),
        });
    }
    let mut out = consume(net, m, t);
    for (p, w) in net.outputs(t) {
        out.set(p, out.get(p) + w);
    }
    Ok(out)
}

/// Breadth-first reachability graph, stopping at `cap` markings.
pub fn reachability(net: &Net, cap: usize) -> PnStateGraph {
    let start = net.initial_marking();
    let mut graph = StateGraph::new(start.clone());
    let mut index = HashMap::from([(start, 0usize)]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        let m = graph.nodes[id].clone();
        let mut complete = true;
        for t in enabled(net, &m) {
            let next = fire(net, &m, t).expect("enabled");
            let to = match index.get(&next) {
                Some(&to) => to,
                None if graph.node_count() >= cap => {
                    complete = false;
                    graph.truncated = true;
                    continue;
                }
                None => {
                    let to = graph.add_node(next.clone());
                    index.insert(next, to);
                    queue.push_back(to);
                    to
                }
            };
            graph.edges.push(Edge {
                from: id,
                label: t.to_string(),
                to,
            });
        }
        graph.expanded[id] = complete;
    }
    graph
}

/// All firing sequences of length at most `depth`, prefix-closed.
pub fn firing_language(net: &Net, depth: usize) -> Language {
    let mut lang = Language::default();
    let mut frontier: BTreeSet<(Marking, Vec<String>)> =
        BTreeSet::from([(net.initial_marking(), Vec::new())]);
    for _ in 0..=depth {
        let mut next = BTreeSet::new();
        for (m, word) in frontier {
            if word.len() < depth {
                for t in enabled(net, &m) {
                    let mut w = word.clone();
                    w.push(t.to_string());
                    next.insert((fire(net, &m, t).expect("enabled"), w));
                }
            }
            lang.words.insert(word);
        }
        frontier = next;
    }
    lang
}

#[cfg(test)]
mod tests {
    use super::super::model::{Arc, ContactRule, Place, Transition};
    use super::*;

    fn arc(a: &str, b: &str) -> Arc {
        Arc {
            from: a.into(),
            to: b.into(),
            weight: 1,
        }
    }

    /// p -> t -> q, both places capacity 1.
    fn line(p_tokens: u32, q_tokens: u32) -> Net {
        let mut net = Net {
            places: vec![
                Place {
                    id: "p".into(),
                    capacity: Some(1),
                },
                Place {
                    id: "q".into(),
                    capacity: Some(1),
                },
            ],
            transitions: vec![Transition::new("t")],
            arcs: vec![arc("p", "t"), arc("t", "q")],
            ..Net::default()
        };
        net.initial.insert("p".into(), p_tokens);
        net.initial.insert("q".into(), q_tokens);
        net
    }

    #[test]
    fn contact_rule_blocks_marked_outputs() {
        let net = line(1, 1);
        assert!(enabled(&net, &net.initial_marking()).is_empty());
        let err = fire(&net, &net.initial_marking(), "t").unwrap_err();
        assert_eq!(err.transition, "t");
    }

    #[test]
    fn capacity_still_blocks_without_contact_rule() {
        let mut net = line(1, 1);
        net.contact = ContactRule::Off;
        assert!(enabled(&net, &net.initial_marking()).is_empty());
        net.places[1].capacity = None;
        assert_eq!(enabled(&net, &net.initial_marking()), vec!["t"]);
    }

    #[test]
    fn single_marked_place_without_transitions() {
        let mut net = Net {
            places: vec![Place {
                id: "p".into(),
                capacity: None,
            }],
            ..Net::default()
        };
        net.initial.insert("p".into(), 1);
        let g = reachability(&net, 10);
        assert_eq!((g.node_count(), g.edge_count()), (1, 0));
        assert!(!g.truncated);
        assert_eq!(firing_language(&net, 3).len(), 1);
    }

    #[test]
    fn depth_zero_is_the_empty_word() {
        let net = line(1, 0);
        let lang = firing_language(&net, 0);
        assert_eq!(lang.len(), 1);
        assert!(lang.contains(&[]));
        assert!(firing_language(&net, 1).contains(&["t"]));
    }
}
