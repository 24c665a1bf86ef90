#![allow(dead_code)]

use std::path::PathBuf;

use fmpn::exec::InputSchedule;
use fmpn::fm::{FmModel, InitialThing, Position, Stage};
use fmpn::io::{parse_fm, parse_mapping, parse_pn, parse_schedule, FmDocument, Schedule};
use fmpn::pn::Net;
use fmpn::translate::EventMapping;

pub fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn text(name: &str) -> String {
    std::fs::read_to_string(path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn fm(name: &str) -> FmDocument {
    parse_fm(&text(name)).unwrap_or_else(|d| panic!("{name}:\n{d}"))
}

pub fn net(name: &str) -> Net {
    parse_pn(&text(name)).unwrap_or_else(|d| panic!("{name}:\n{d}"))
}

pub fn mapping(name: &str) -> EventMapping {
    parse_mapping(&text(name)).unwrap_or_else(|d| panic!("{name}:\n{d}"))
}

pub fn schedule(name: &str) -> Schedule {
    parse_schedule(&text(name)).unwrap_or_else(|d| panic!("{name}:\n{d}"))
}

pub fn fm_input(name: &str, mapping: Option<&EventMapping>) -> InputSchedule {
    schedule(name).to_fm(mapping).unwrap()
}

pub const FM_FIXTURES: [&str; 5] = [
    "parking_gate.fm",
    "vending_control.fm",
    "vending.fm",
    "timed_vending.fm",
    "broken.fm",
];

pub const TIMED_SCHEDULES: [&str; 4] = [
    "timed_schedules/a_start_only.sched",
    "timed_schedules/b_coin_at_limit.sched",
    "timed_schedules/c_late_coin.sched",
    "timed_schedules/d_next_coin.sched",
];

/// The parking gate with `cars` cars waiting at the road entry.
pub fn parking_gate_with_cars(cars: usize) -> FmModel {
    let mut m = fm("parking_gate.fm").model;
    for _ in 0..cars {
        m.things.push(InitialThing {
            machine: "before".into(),
            position: Position::Stage(Stage::Transfer),
            attrs: Default::default(),
        });
    }
    m
}

pub fn car_in_area_implies_arm_up(state: &fmpn::exec::ExecState) -> bool {
    state.things_in("area").next().is_none() || state.things_in("arm_top").any(|t| t.kind == "arm")
}

/// Random bounded net: every place has a capacity of 1 or 2 and at most two
/// tokens are placed initially, never none.
pub fn random_net(rng: &mut impl rand::Rng) -> Net {
    use fmpn::pn::{Arc, Place, Transition};
    let np = rng.gen_range(1..=4);
    let nt = rng.gen_range(1..=4);
    let mut net = Net::default();
    for i in 0..np {
        net.places.push(Place {
            id: format!("p{i}"),
            capacity: Some(rng.gen_range(1..=2)),
        });
    }
    let mut budget = 2u32;
    for p in &net.places {
        let n = rng.gen_range(0..=p.capacity.unwrap().min(budget));
        if n > 0 {
            net.initial.insert(p.id.clone(), n);
            budget -= n;
        }
    }
    if net.initial.is_empty() {
        net.initial.insert("p0".into(), 1);
    }
    for j in 0..nt {
        let t = format!("t{j}");
        net.transitions.push(Transition::new(t.clone()));
        for p in &net.places {
            let cap = p.capacity.unwrap();
            if rng.gen_bool(0.4) {
                net.arcs.push(Arc {
                    from: p.id.clone(),
                    to: t.clone(),
                    weight: rng.gen_range(1..=cap),
                });
            }
            if rng.gen_bool(0.4) {
                net.arcs.push(Arc {
                    from: t.clone(),
                    to: p.id.clone(),
                    weight: rng.gen_range(1..=cap),
                });
            }
        }
    }
    net
}
