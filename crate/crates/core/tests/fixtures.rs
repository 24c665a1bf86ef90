mod common;

use fmpn::fm::{validate, SimplifyLevel};
use fmpn::io::{parse_fm, parse_pnml, print_fm, render_fm, render_net};
use fmpn::pn::validate_net;

use common::*;

#[test]
fn fixtures_parse_and_only_broken_is_invalid() {
    for f in FM_FIXTURES {
        let doc = fm(f);
        let report = validate(&doc.model);
        assert_eq!(report.is_valid(), f != "broken.fm", "{f}:\n{report}");
    }
    for f in ["vending_control.pn", "vending_stock.pn", "timed.pn"] {
        assert!(validate_net(&net(f)).is_valid(), "{f}");
    }
    for f in ["vending_control.map", "timed.map"] {
        mapping(f);
    }
}

#[test]
fn printed_models_read_back() {
    for f in FM_FIXTURES {
        let doc = fm(f);
        assert_eq!(parse_fm(&print_fm(&doc)).unwrap(), doc, "{f}");
    }
}

#[test]
fn pnml_matches_text_net() {
    assert_eq!(
        parse_pnml(&text("vending_control.pnml")).unwrap(),
        net("vending_control.pn")
    );
}

fn dashed(dot: &str) -> usize {
    dot.lines().filter(|l| l.contains("style=dashed")).count()
}

#[test]
fn drawings_are_stable_and_show_triggers_dashed() {
    let m = fm("parking_gate.fm").model;
    let a = render_fm(&m, SimplifyLevel::Full);
    assert_eq!(a, render_fm(&m.clone(), SimplifyLevel::Full));
    assert_eq!(dashed(&a), m.triggers.len());
    assert_eq!(dashed(&a), 3);
    let n = render_net(&net("vending_control.pn"));
    assert_eq!(dashed(&n), 0);
    assert_eq!(n.matches("shape=circle").count(), 3);
    assert_eq!(n.matches("shape=box").count(), 4);
}

#[test]
fn parking_gate_is_safe_with_two_cars() {
    let g = fmpn::exec::explore(&parking_gate_with_cars(2), 10_000, 10_000).unwrap();
    assert!(!g.truncated);
    assert_eq!(g.node_count(), 190);
    assert!(g.nodes.iter().all(|n| car_in_area_implies_arm_up(&n.state)));
}
