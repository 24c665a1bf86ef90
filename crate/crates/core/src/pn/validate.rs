use std::collections::BTreeSet;

use crate::report::ValidationReport;

use super::model::{Net, NetClass};

pub fn validate_net(net: &Net) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut v =
        |element: &str, rule: &'static str, message: String| report.push(element, rule, message);

    let mut ids = BTreeSet::new();
    for id in net
        .places
        .iter()
        .map(|p| &p.id)
        .chain(net.transitions.iter().map(|t| &t.id))
    {
        if !ids.insert(id.as_str()) {
            v(id, "duplicate id", format!("`{id}` is declared twice"));
        }
    }

    for (i, a) in net.arcs.iter().enumerate() {
        let el = format!("{}->{}", a.from, a.to);
        let kind = |id: &str| {
            if net.place(id).is_some() {
                Some(true)
            } else if net.transition(id).is_some() {
                Some(false)
            } else {
                None
            }
        };
        match (kind(&a.from), kind(&a.to)) {
            (None, _) => v(&el, "arc endpoint", format!("unknown node `{}`", a.from)),
            (_, None) => v(&el, "arc endpoint", format!("unknown node `{}`", a.to)),
            (Some(x), Some(y)) if x == y => v(
                &el,
                "bipartite",
                format!("arc joins two {}", if x { "places" } else { "transitions" }),
            ),
            _ => {}
        }
        if a.weight == 0 {
            v(&el, "arc weight", "weight must be at least 1".into());
        }
        if net.arcs[..i]
            .iter()
            .any(|b| b.from == a.from && b.to == a.to)
        {
            v(
                &el,
                "duplicate arc",
                "parallel arcs must be merged into one weight".into(),
            );
        }
    }

    for (p, &n) in &net.initial {
        match net.place(p) {
            None => v(p, "marking", format!("tokens on unknown place `{p}`")),
            Some(place) => {
                if let Some(cap) = place.capacity.filter(|&c| n > c) {
                    v(p, "capacity", format!("{n} tokens exceed capacity {cap}"));
                }
            }
        }
    }
    for t in &net.transitions {
        if t.external && t.delay.is_some() {
            v(
                &t.id,
                "external delay",
                "external transitions cannot carry a delay".into(),
            );
        }
    }
    report
}

#[derive(Debug, thiserror::Error)]
#[error("invalid net:\n{0}")]
pub struct InvalidNet(pub ValidationReport);

pub fn class_of(net: &Net) -> Result<NetClass, InvalidNet> {
    let report = validate_net(net);
    if !report.is_valid() {
        return Err(InvalidNet(report));
    }
    Ok(net.class())
}

#[cfg(test)]
mod tests {
    use super::super::model::{Arc, Place, Transition};
    use super::*;

    #[test]
    fn empty_net_is_valid() {
        assert!(validate_net(&Net::default()).is_valid());
    }

    #[test]
    fn place_to_place_arc_is_reported_once() {
        let net = Net {
            places: vec![
                Place {
                    id: "a".into(),
                    capacity: None,
                },
                Place {
                    id: "b".into(),
                    capacity: None,
                },
            ],
            arcs: vec![Arc {
                from: "a".into(),
                to: "b".into(),
                weight: 1,
            }],
            ..Net::default()
        };
        assert_eq!(validate_net(&net).rules(), vec!["bipartite"]);
    }

    #[test]
    fn overfull_initial_marking() {
        let mut net = Net {
            places: vec![Place {
                id: "a".into(),
                capacity: Some(1),
            }],
            transitions: vec![Transition::new("t")],
            ..Net::default()
        };
        net.initial.insert("a".into(), 2);
        assert_eq!(validate_net(&net).rules(), vec!["capacity"]);
        assert!(class_of(&net).is_err());
    }
}
