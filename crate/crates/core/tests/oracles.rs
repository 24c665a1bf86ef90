//! Values computed by `oracles/pn_reach.py`, an independent breadth-first
//! search over the same nets.

mod common;

use fmpn::pn::{firing_language, reachability};

use common::net;

#[test]
fn vending_control_reachability_and_language() {
    let n = net("vending_control.pn");
    let g = reachability(&n, 10_000);
    assert_eq!((g.node_count(), g.edge_count(), g.truncated), (3, 4, false));
    assert_eq!(firing_language(&n, 6).len(), 18);
}

#[test]
fn vending_stock_reachability_and_language() {
    let n = net("vending_stock.pn");
    let g = reachability(&n, 10_000);
    assert_eq!(
        (g.node_count(), g.edge_count(), g.truncated),
        (32, 34, false)
    );
    assert_eq!(firing_language(&n, 6).len(), 16);
}

#[test]
fn reachability_cap_truncates() {
    let g = reachability(&net("vending_stock.pn"), 5);
    assert!(g.truncated);
    assert!(g.node_count() <= 5);
}
