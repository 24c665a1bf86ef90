//! End-to-end acceptance checks, one PASS/FAIL line per criterion.

mod common;

use std::time::Instant;

use fmpn::equiv::{check_timed, check_untimed, Caps};
use fmpn::events::{conform, extract_events, extract_events_with_states, GuardStates};
use fmpn::exec::{explore, replay, run, ActionKind, ClockState, Injection, InputSchedule, Trace};
use fmpn::fm::{simplify, FmModel, Power, SimplifyLevel, Value};
use fmpn::io::{parse_trace, render_fm, FmDocument};
use fmpn::pn::{firing_language, reachability};
use fmpn::translate::{translate, translate_timed};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn simulate(doc: &FmDocument, input: &InputSchedule, horizon: u64) -> Result<Trace, String> {
    run(&doc.model, input, horizon).map_err(|e| e.to_string())
}

fn event_ids(doc: &FmDocument, t: &Trace) -> Vec<String> {
    extract_events(&t.records, &doc.events)
        .ids()
        .into_iter()
        .map(str::to_string)
        .collect()
}

fn conforms(doc: &FmDocument, t: &Trace) -> Check {
    let (etrace, states) =
        extract_events_with_states(&doc.model, t, &doc.events).map_err(|e| e.to_string())?;
    let control = doc.control.as_ref().ok_or("model has no control graph")?;
    let gs = GuardStates {
        model: &doc.model,
        states: &states,
    };
    let c = conform(&etrace, control, Some(&gs));
    ensure(c.is_conformant(), || format!("{c:?} on {:?}", etrace.ids()))
}

/// Explored states of the gate with one waiting car.
const PARKING_STATES: usize = 33;

fn parking_gate() -> Check {
    let doc = fm("parking_gate.fm");
    let t = simulate(&doc, &fm_input("cars.sched", None), 1000)?;
    let ids = event_ids(&doc, &t);
    let want: Vec<String> = ["E1", "E2", "E3", "E4"]
        .repeat(3)
        .iter()
        .map(|s| s.to_string())
        .collect();
    ensure(ids == want, || format!("event trace {ids:?}"))?;
    conforms(&doc, &t)?;

    let g = explore(&parking_gate_with_cars(1), 10_000, 10_000).map_err(|e| e.to_string())?;
    ensure(!g.truncated, || "exploration truncated".into())?;
    if let Some(bad) = g
        .nodes
        .iter()
        .find(|n| !car_in_area_implies_arm_up(&n.state))
    {
        return Err(format!("safety violated in {}", bad.key));
    }
    ensure(
        g.node_count() < 100 && g.node_count() == PARKING_STATES,
        || {
            format!(
                "{} explored states, expected {PARKING_STATES}",
                g.node_count()
            )
        },
    )
}

fn vending_control_net() -> Check {
    let n = net("vending_control.pn");
    let g = reachability(&n, 10_000);
    ensure(!g.truncated, || "reachability truncated".into())?;
    ensure(g.reaches_initial().iter().all(|&b| b), || {
        "a marking cannot return to the initial one".into()
    })?;
    let lang = firing_language(&n, 6);
    for w in [
        ["insert", "reject", "insert"],
        ["insert", "accept", "dispense"],
    ] {
        ensure(lang.contains(&w), || format!("firing language lacks {w:?}"))?;
    }
    let doc = fm("vending_control.fm");
    let v = check_untimed(
        &n,
        &doc.model,
        &doc.events,
        &mapping("vending_control.map"),
        6,
        Caps::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure(v.equal, || format!("hand-built model: {v}"))?;
    let tr = translate(&n).map_err(|e| e.to_string())?;
    let v = check_untimed(&n, &tr.model, &tr.events, &tr.mapping, 6, Caps::default())
        .map_err(|e| e.to_string())?;
    ensure(v.equal, || format!("translated model: {v}"))
}

fn int(attrs: &fmpn::fm::Attrs, key: &str) -> i64 {
    match attrs.get(key) {
        Some(Value::Int(i)) => *i,
        _ => 0,
    }
}

fn vending_case(doc: &FmDocument, coins: &[i64], quantity: i64) -> Check {
    let mut inj: Vec<Injection> = coins
        .iter()
        .enumerate()
        .map(|(i, &v)| Injection {
            time: i as u64 + 1,
            machine: "coins".into(),
            stage: None,
            attrs: [("value".to_string(), Value::Int(v))].into(),
        })
        .collect();
    inj.push(Injection {
        time: 10,
        machine: "selector".into(),
        stage: None,
        attrs: [("quantity".to_string(), Value::Int(quantity))].into(),
    });
    let t = simulate(
        doc,
        &InputSchedule::new(inj).map_err(|e| e.to_string())?,
        1000,
    )?;
    let case = format!("coins {coins:?} quantity {quantity}");
    let v: i64 = coins.iter().sum();
    let total = 5 * quantity;
    let s = &t.final_state;

    let products = s.environment.iter().filter(|x| x.kind == "item").count();
    ensure(products == usize::from(v >= total), || {
        format!("{case}: {products} products released")
    })?;
    let change: Vec<i64> = s
        .environment
        .iter()
        .filter(|x| x.kind == "change")
        .map(|x| int(&x.attrs, "amount"))
        .collect();
    let want: Vec<i64> = if v > total { vec![v - total] } else { vec![] };
    ensure(change == want, || format!("{case}: change {change:?}"))?;

    let stored = s.stored("coins").len();
    let returned = s.environment.iter().filter(|x| x.kind == "coin").count();
    ensure(stored + returned == coins.len(), || {
        format!(
            "{case}: {stored} stored + {returned} returned of {}",
            coins.len()
        )
    })?;
    let tallied: i64 = s
        .stored("tally")
        .iter()
        .map(|x| int(&x.attrs, "value"))
        .sum();
    ensure(tallied == v, || format!("{case}: tally {tallied}"))?;

    conforms(doc, &t).map_err(|e| format!("{case}: {e}"))?;
    let ids = event_ids(doc, &t);
    let branch = if v > total {
        Some("E9a")
    } else if v == total {
        Some("E9b")
    } else {
        None
    };
    match branch {
        Some(b) => ensure(
            ids.ends_with(&["E8".into(), b.into(), "E10".into()]),
            || format!("{case}: {ids:?}"),
        ),
        None => ensure(ids.last().map(String::as_str) == Some("E8"), || {
            format!("{case}: {ids:?}")
        }),
    }
}

fn full_vending() -> Check {
    let doc = fm("vending.fm");
    for (name, want) in [
        ("vend_exact.sched", "E9b"),
        ("vend_change.sched", "E9a"),
        ("vend_short.sched", "E8"),
    ] {
        let t = simulate(&doc, &fm_input(name, None), 1000)?;
        conforms(&doc, &t).map_err(|e| format!("{name}: {e}"))?;
        let ids = event_ids(&doc, &t);
        ensure(ids.iter().any(|e| e == want), || format!("{name}: {ids:?}"))?;
    }
    let values = [1, 2, 5, 10];
    let mut coin_sets: Vec<Vec<i64>> = values.iter().map(|&a| vec![a]).collect();
    for &a in &values {
        for &b in &values {
            coin_sets.push(vec![a, b]);
            for &c in &values {
                coin_sets.push(vec![a, b, c]);
            }
        }
    }
    for coins in &coin_sets {
        for quantity in 1..=3 {
            vending_case(&doc, coins, quantity)?;
        }
    }
    Ok(())
}

fn timed_run_of(name: &str, horizon: u64) -> Result<(FmDocument, Trace, Vec<String>), String> {
    let doc = fm("timed_vending.fm");
    let t = simulate(&doc, &fm_input(name, Some(&mapping("timed.map"))), horizon)?;
    let ids = event_ids(&doc, &t);
    Ok((doc, t, ids))
}

fn contains_run(ids: &[String], run: &[&str]) -> bool {
    ids.windows(run.len())
        .any(|w| w.iter().zip(run).all(|(a, b)| a == b))
}

fn timed_constraints() -> Check {
    let doc = fm("timed_vending.fm");
    let t = simulate(&doc, &fm_input("none.sched", None), 200)?;
    ensure(t.final_state.power_of("coins") == Power::Off, || {
        "coins still powered".into()
    })?;
    let off = t
        .records
        .iter()
        .find(|r| r.action == ActionKind::PowerChange && r.elements.iter().any(|e| e == "off"))
        .ok_or("no power-off record")?;
    ensure(off.time == 101, || format!("power off at {}", off.time))?;

    let (_, t, ids) = timed_run_of(TIMED_SCHEDULES[1], 100)?;
    ensure(contains_run(&ids, &["E4", "E5", "E6"]), || {
        format!("coin at limit: {ids:?}")
    })?;
    ensure(t.final_state.clock("c1").is_none(), || {
        "clock c1 still running".into()
    })?;
    let c2 = t.final_state.clock("c2");
    ensure(
        c2 == Some(ClockState {
            started: 100,
            deadline: 160,
        }),
        || format!("clock c2 {c2:?}"),
    )?;
    ensure(t.final_state.stored("coins").len() == 1, || {
        "coin not stored".into()
    })?;
    conforms(&doc, &t)?;

    let (_, t, ids) = timed_run_of(TIMED_SCHEDULES[2], 200)?;
    ensure(ids.iter().any(|e| e == "E7"), || {
        format!("late coin: {ids:?}")
    })?;
    ensure(!ids.iter().any(|e| e == "E8"), || {
        format!("late coin accepted: {ids:?}")
    })?;
    ensure(t.final_state.stored("coins").is_empty(), || {
        "coins kept".into()
    })?;
    conforms(&doc, &t)?;

    let (_, t, ids) = timed_run_of(TIMED_SCHEDULES[3], 109)?;
    ensure(contains_run(&ids, &["E8", "E9"]), || {
        format!("next coin: {ids:?}")
    })?;
    let c2 = t.final_state.clock("c2");
    ensure(
        c2 == Some(ClockState {
            started: 109,
            deadline: 169,
        }),
        || format!("clock c2 {c2:?}"),
    )?;
    ensure(t.final_state.stored("coins").len() == 2, || {
        "coins not stored".into()
    })?;
    conforms(&doc, &t)?;

    let n = net("timed.pn");
    let m = mapping("timed.map");
    let all: Vec<_> = TIMED_SCHEDULES
        .iter()
        .map(|s| schedule(s).stimuli())
        .collect();
    let v = check_timed(&n, &doc.model, &doc.events, &m, &all, 300).map_err(|e| e.to_string())?;
    ensure(v.equal(), || format!("hand-built model: {v}"))?;
    let tr = translate_timed(&n).map_err(|e| e.to_string())?;
    let v = check_timed(&n, &tr.model, &tr.events, &tr.mapping, &all, 300)
        .map_err(|e| e.to_string())?;
    ensure(v.equal(), || format!("translated model: {v}"))
}

fn translation_sweep() -> Check {
    let mut failures = Vec::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = random_net(&mut rng);
        let tr = translate(&n).map_err(|e| format!("seed {seed}: {e}"))?;
        let v = check_untimed(&n, &tr.model, &tr.events, &tr.mapping, 5, Caps::default())
            .map_err(|e| format!("seed {seed}: {e}"))?;
        if !v.equal {
            failures.push(format!("seed {seed}: {v}\n{}", fmpn::io::print_pn(&n)));
        }
    }
    ensure(failures.is_empty(), || failures.join("\n"))
}

fn without_trigger(model: &FmModel, id: &str) -> FmModel {
    let mut m = model.clone();
    m.triggers.retain(|t| t.id != id);
    for g in &mut m.groups {
        g.members.retain(|x| x.element != id);
    }
    m.groups.retain(|g| !g.members.is_empty());
    m
}

fn mutation_sensitivity() -> Check {
    let n = net("vending_control.pn");
    let tr = translate(&n).map_err(|e| e.to_string())?;
    ensure(!tr.model.triggers.is_empty(), || {
        "translation has no triggers".into()
    })?;
    for t in &tr.model.triggers {
        let m = without_trigger(&tr.model, &t.id);
        let v = check_untimed(&n, &m, &tr.events, &tr.mapping, 6, Caps::default())
            .map_err(|e| format!("without {}: {e}", t.id))?;
        ensure(!v.equal, || format!("deleting `{}` goes unnoticed", t.id))?;
    }
    Ok(())
}

fn simulations() -> Vec<(FmDocument, InputSchedule, u64)> {
    let timed_map = mapping("timed.map");
    let mut out = vec![(fm("parking_gate.fm"), fm_input("cars.sched", None), 1000)];
    for s in ["vend_exact.sched", "vend_change.sched", "vend_short.sched"] {
        out.push((fm("vending.fm"), fm_input(s, None), 1000));
    }
    out.push((fm("timed_vending.fm"), fm_input("none.sched", None), 200));
    for s in TIMED_SCHEDULES {
        out.push((fm("timed_vending.fm"), fm_input(s, Some(&timed_map)), 300));
    }
    out
}

fn determinism_and_replay() -> Check {
    for (i, (doc, input, horizon)) in simulations().iter().enumerate() {
        let a = simulate(doc, input, *horizon)?;
        let b = simulate(doc, input, *horizon)?;
        let text = a.to_text();
        ensure(text == b.to_text(), || {
            format!("run {i} differs between invocations")
        })?;
        let replayed = replay(&doc.model, &a.records).map_err(|e| e.to_string())?;
        ensure(replayed == a.final_state, || {
            format!("run {i}: replay reaches a different state")
        })?;
        let parsed = parse_trace(&text).map_err(|e| format!("run {i}: {e}"))?;
        ensure(parsed == a.records, || {
            format!("run {i}: trace text does not read back")
        })?;
    }
    Ok(())
}

const LEVELS: [SimplifyLevel; 3] = [
    SimplifyLevel::Full,
    SimplifyLevel::NoTransport,
    SimplifyLevel::CreateProcessOnly,
];

fn simplification() -> Check {
    let mut models: Vec<(String, FmModel)> = FM_FIXTURES
        .iter()
        .map(|f| (f.to_string(), fm(f).model))
        .collect();
    for p in ["vending_control.pn", "vending_stock.pn"] {
        models.push((
            p.into(),
            translate(&net(p)).map_err(|e| e.to_string())?.model,
        ));
    }
    models.push((
        "timed.pn".into(),
        translate_timed(&net("timed.pn"))
            .map_err(|e| e.to_string())?
            .model,
    ));
    for (name, m) in &models {
        for level in LEVELS {
            let once = simplify(m, level);
            ensure(simplify(&once, level) == once, || {
                format!("{name} at {level:?} is not idempotent")
            })?;
        }
    }
    let dot = render_fm(
        &fm("parking_gate.fm").model,
        SimplifyLevel::CreateProcessOnly,
    );
    let nodes: Vec<&str> = dot
        .lines()
        .map(str::trim)
        .filter(|l| l.starts_with('"') && !l.contains("->"))
        .collect();
    ensure(!nodes.is_empty(), || "no nodes rendered".into())?;
    for bad in [".Release\"", ".Transfer\"", ".Receive\""] {
        if let Some(l) = nodes.iter().find(|l| l.contains(bad)) {
            return Err(format!("node line `{l}`"));
        }
    }
    Ok(())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("parking gate trace, conformance and safety", parking_gate),
        ("vending control net", vending_control_net),
        ("full vending machine", full_vending),
        ("timed constraints", timed_constraints),
        ("translation sweep over random nets", translation_sweep),
        ("mutation sensitivity", mutation_sensitivity),
        ("determinism and replay", determinism_and_replay),
        ("simplification", simplification),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = check();
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(()) => println!("PASS {} {name} ({secs:.2}s)", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.2}s): {e}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
