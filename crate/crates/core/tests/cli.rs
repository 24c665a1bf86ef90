mod common;

use std::process::{Command, Output};

use common::path;

fn fmpn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmpn"))
        .args(args)
        .current_dir(path(""))
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_exit_codes() {
    assert_eq!(code(&fmpn(&["validate", "parking_gate.fm"])), 0);
    assert_eq!(code(&fmpn(&["validate", "vending_control.pnml"])), 0);
    assert_eq!(code(&fmpn(&["validate", "broken.fm"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.fm");
    std::fs::write(&bad, "machine m stages\n").unwrap();
    let o = fmpn(&["validate", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.fm:1:"));
    assert_eq!(code(&fmpn(&["simulate"])), 3);
}

#[test]
fn untimed_equivalence() {
    let o = fmpn(&[
        "equiv",
        "vending_control.pn",
        "vending_control.fm",
        "--map",
        "vending_control.map",
        "--depth",
        "6",
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn timed_equivalence() {
    let o = fmpn(&[
        "equiv",
        "timed.pn",
        "timed_vending.fm",
        "--map",
        "timed.map",
        "--schedules",
        "timed_schedules",
        "--horizon",
        "300",
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn power_off_after_timeout() {
    let o = fmpn(&[
        "simulate",
        "timed_vending.fm",
        "--schedule",
        "none.sched",
        "--horizon",
        "200",
    ]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let last = out.lines().last().unwrap();
    let fields: Vec<&str> = last.split_whitespace().collect();
    assert_eq!(
        &fields[1..],
        ["101", "power-change", "power_down,coins,off", "-"],
        "{last}"
    );
}

#[test]
fn reach_counts_and_truncation() {
    let o = fmpn(&["reach", "vending_stock.pn"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "markings 32 edges 34");
    assert_eq!(code(&fmpn(&["reach", "vending_stock.pn", "--cap", "5"])), 2);
}

#[test]
fn translated_net_is_equivalent() {
    let dir = tempfile::tempdir().unwrap();
    let fm = dir.path().join("t.fm");
    let map = dir.path().join("t.map");
    let (fm, map) = (fm.to_str().unwrap(), map.to_str().unwrap());
    assert_eq!(
        code(&fmpn(&[
            "translate",
            "vending_control.pn",
            "-o",
            fm,
            "--map-out",
            map
        ])),
        0
    );
    assert_eq!(code(&fmpn(&["validate", fm])), 0);
    let o = fmpn(&[
        "equiv",
        "vending_control.pn",
        fm,
        "--map",
        map,
        "--depth",
        "6",
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn events_of_a_saved_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("cars.trace");
    let trace = trace.to_str().unwrap();
    let o = fmpn(&[
        "simulate",
        "parking_gate.fm",
        "--schedule",
        "cars.sched",
        "--trace",
        trace,
    ]);
    assert_eq!(code(&o), 0);
    let o = fmpn(&["events", "parking_gate.fm", "--trace", trace]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("conformant"));
    assert_eq!(stdout(&o).lines().count(), 12);
}

#[test]
fn render_levels() {
    let o = fmpn(&["render", "parking_gate.fm", "--level", "no-transport"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("digraph fm {"));
    assert_eq!(
        code(&fmpn(&["render", "parking_gate.fm", "--level", "tiny"])),
        3
    );
}
