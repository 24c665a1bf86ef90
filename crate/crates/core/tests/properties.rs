mod common;

use fmpn::equiv::{check_untimed, fm_language, Caps, Side};
use fmpn::events::{
    conform, event_language, extract_events, extract_events_with_states, GuardStates,
};
use fmpn::exec::{
    enabled_actions, explore, init_state, replay, run, step, Action, ActionKind, ClockState,
    Injection, InputSchedule, MicroStepRecord,
};
use fmpn::fm::{simplify, validate, FmModel, SimplifyLevel, Stage, Value};
use fmpn::graph::Language;
use fmpn::io::{parse_fm, parse_pn, print_fm, print_pn};
use fmpn::pn::{class_of, enabled, fire, firing_language, reachability, Net};
use fmpn::translate::{group_id, place_machine, translate};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn net_from(seed: u64) -> Net {
    random_net(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn elementary(mut net: Net) -> Net {
    for p in &mut net.places {
        p.capacity = Some(1);
    }
    for a in &mut net.arcs {
        a.weight = 1;
    }
    for n in net.initial.values_mut() {
        *n = 1;
    }
    net
}

fn prefix_closed(lang: &Language) -> bool {
    lang.words
        .iter()
        .all(|w| w.is_empty() || lang.words.contains(&w[..w.len() - 1]))
}

fn subset(a: &Language, b: &Language) -> bool {
    a.words.iter().all(|w| b.words.contains(w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn firing_language_is_prefix_closed_and_grows(seed in any::<u64>(), d in 0usize..5) {
        let net = net_from(seed);
        let a = firing_language(&net, d);
        let b = firing_language(&net, d + 1);
        prop_assert!(prefix_closed(&a) && prefix_closed(&b));
        prop_assert!(subset(&a, &b));
        prop_assert_eq!(b.restrict(d), a);
    }

    #[test]
    fn elementary_reachability_stays_safe(seed in any::<u64>()) {
        let net = elementary(net_from(seed));
        let g = reachability(&net, 10_000);
        prop_assert!(!g.truncated);
        prop_assert!(g.nodes.iter().all(|m| m.iter().all(|(_, n)| n <= 1)));
    }

    #[test]
    fn class_ignores_marking_changes(seed in any::<u64>()) {
        let net = net_from(seed);
        let class = class_of(&net).unwrap();
        let g = reachability(&net, 1000);
        for m in &g.nodes {
            let mut moved = net.clone();
            moved.initial = m.iter().map(|(p, n)| (p.to_string(), n)).collect();
            prop_assert_eq!(class_of(&moved).unwrap(), class);
        }
        let e = elementary(net);
        prop_assert_eq!(e.class(), fmpn::pn::NetClass::Elementary);
    }

    #[test]
    fn balanced_unit_firings_keep_token_count(seed in any::<u64>()) {
        let net = net_from(seed);
        let g = reachability(&net, 1000);
        for m in &g.nodes {
            for t in enabled(&net, m) {
                let ins: Vec<_> = net.inputs(t).collect();
                let outs: Vec<_> = net.outputs(t).collect();
                let unit = ins.iter().chain(&outs).all(|&(_, w)| w == 1);
                if unit && ins.len() == outs.len() {
                    prop_assert_eq!(fire(&net, m, t).unwrap().total(), m.total());
                }
            }
        }
    }

    #[test]
    fn translation_is_equivalent_at_small_depth(seed in any::<u64>(), d in 0usize..=4) {
        let net = net_from(seed);
        let tr = translate(&net).unwrap();
        let v = check_untimed(&net, &tr.model, &tr.events, &tr.mapping, d, Caps::default()).unwrap();
        prop_assert!(v.equal, "{}\n{}", v, print_pn(&net));
    }

    #[test]
    fn stored_things_follow_the_marking(seed in any::<u64>(), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..8)) {
        let net = net_from(seed);
        let model = translate(&net).unwrap().model;
        let mut m = net.initial_marking();
        let mut s = init_state(&model).unwrap();
        for pick in picks {
            let ts = enabled(&net, &m);
            if ts.is_empty() {
                break;
            }
            let t = ts[pick.index(ts.len())];
            m = fire(&net, &m, t).unwrap();
            s = step(&s, &model, &Action::Group { group: group_id(t) }).unwrap().0;
            for p in &net.places {
                prop_assert_eq!(s.stored(&place_machine(&p.id)).len() as u32, m.get(&p.id), "{} after {}", p.id, t);
            }
        }
    }

    #[test]
    fn translation_is_deterministic_up_to_renaming(seed in any::<u64>()) {
        let net = net_from(seed);
        let a = translate(&net).unwrap();
        prop_assert_eq!(&translate(&net).unwrap().model, &a.model);
        let mut renamed = net.clone();
        let rename = |id: &mut String| *id = id.replacen('p', "q", 1).replacen('t', "u", 1);
        renamed.places.iter_mut().for_each(|p| rename(&mut p.id));
        renamed.transitions.iter_mut().for_each(|t| rename(&mut t.id));
        renamed.arcs.iter_mut().for_each(|a| {
            rename(&mut a.from);
            rename(&mut a.to);
        });
        renamed.initial = renamed.initial.into_iter().map(|(mut p, n)| {
            rename(&mut p);
            (p, n)
        }).collect();
        let b = translate(&renamed).unwrap();
        let shape = |m: &FmModel| (m.machines.len(), m.flows.len(), m.parks.len(), m.unparks.len(), m.triggers.len(), m.groups.len(), m.things.len());
        prop_assert_eq!(shape(&a.model), shape(&b.model));
        let rn = |l: Language| -> Vec<Vec<String>> {
            l.words.into_iter().map(|w| w.into_iter().map(|t| t.replacen('u', "t", 1)).collect()).collect()
        };
        let la = fm_language(&a.model, &a.events, &a.mapping, 3, Caps::default()).unwrap();
        let lb = fm_language(&b.model, &b.events, &b.mapping, 3, Caps::default()).unwrap();
        prop_assert_eq!(la.words.into_iter().collect::<Vec<_>>(), rn(lb));
    }

    #[test]
    fn texts_read_back(seed in any::<u64>()) {
        let net = net_from(seed);
        prop_assert_eq!(parse_pn(&print_pn(&net)).unwrap(), net.clone());
        let tr = translate(&net).unwrap();
        let doc = fmpn::io::FmDocument { model: tr.model, events: tr.events, control: Some(tr.control) };
        prop_assert_eq!(parse_fm(&print_fm(&doc)).unwrap(), doc);
    }

    #[test]
    fn diagnostics_point_into_the_input(lines in prop::collection::vec(prop::collection::vec(prop::sample::select(vec![
        "machine", "m", "in", "s", "stages", "Create,Release", "flow", "m.Create", "->", "m.Release", "{", "}", "as",
        "trigger", "=>", "create", "event", "anchor", "sphere", "7", "\"x\"", "park", ":", "if", "count(m)", "@",
    ]), 0..8), 0..6)) {
        let text: String = lines.iter().map(|l| l.join(" ") + "\n").collect();
        if let Err(d) = parse_fm(&text) {
            let src: Vec<&str> = text.lines().collect();
            for e in &d.0 {
                prop_assert!(e.span.line >= 1 && e.span.line <= src.len().max(1), "{e} in {text:?}");
                let len = src.get(e.span.line - 1).map_or(0, |l| l.len());
                prop_assert!(e.span.start <= e.span.end && e.span.end <= len + 1, "{e} in {text:?}");
            }
        }
    }

    #[test]
    fn vending_runs_conserve_and_conform(
        coins in prop::collection::vec(prop::sample::select(vec![1i64, 2, 5, 10]), 1..5),
        quantity in 1i64..4,
        at in 5u64..20,
    ) {
        let doc = fm("vending.fm");
        let mut inj: Vec<Injection> = coins.iter().enumerate().map(|(i, &v)| Injection {
            time: i as u64,
            machine: "coins".into(),
            stage: None,
            attrs: [("value".to_string(), Value::Int(v))].into(),
        }).collect();
        inj.push(Injection {
            time: at,
            machine: "selector".into(),
            stage: None,
            attrs: [("quantity".to_string(), Value::Int(quantity))].into(),
        });
        let input = InputSchedule::new(inj).unwrap();
        let t = run(&doc.model, &input, 100).unwrap();
        let count = |k: ActionKind| t.records.iter().filter(|r| r.action == k).count();
        let initial = init_state(&doc.model).unwrap().thing_count();
        prop_assert_eq!(t.final_state.thing_count(), initial + count(ActionKind::Create) + count(ActionKind::Injection));
        let returned = t.final_state.environment.iter().filter(|x| x.kind == "coin").count();
        prop_assert_eq!(t.final_state.stored("coins").len() + returned, coins.len());
        prop_assert_eq!(run(&doc.model, &input, 100).unwrap().to_text(), t.to_text());
        prop_assert_eq!(replay(&doc.model, &t.records).unwrap(), t.final_state.clone());
        let (etrace, states) = extract_events_with_states(&doc.model, &t, &doc.events).unwrap();
        let gs = GuardStates { model: &doc.model, states: &states };
        prop_assert!(conform(&etrace, doc.control.as_ref().unwrap(), Some(&gs)).is_conformant(), "{:?}", etrace.ids());
    }

    #[test]
    fn parking_runs_conform(gaps in prop::collection::vec(15u64..40, 1..5)) {
        let doc = fm("parking_gate.fm");
        let mut time = 0;
        let inj: Vec<Injection> = gaps.iter().map(|g| {
            time += g;
            Injection { time, machine: "before".into(), stage: None, attrs: Default::default() }
        }).collect();
        let t = run(&doc.model, &InputSchedule::new(inj).unwrap(), 1000).unwrap();
        let (etrace, states) = extract_events_with_states(&doc.model, &t, &doc.events).unwrap();
        prop_assert_eq!(etrace.len(), 4 * gaps.len());
        let gs = GuardStates { model: &doc.model, states: &states };
        prop_assert!(conform(&etrace, doc.control.as_ref().unwrap(), Some(&gs)).is_conformant());
    }

    #[test]
    fn event_extraction_is_a_projection(keep in prop::collection::vec(any::<bool>(), 128)) {
        let doc = fm("vending.fm");
        let t = run(&doc.model, &fm_input("vend_change.sched", None), 1000).unwrap();
        let full = extract_events(&t.records, &doc.events);
        let thinned: Vec<MicroStepRecord> = t.records.iter().enumerate()
            .filter(|(i, r)| !doc.events.occurrences(r).is_empty() || keep[i % keep.len()])
            .map(|(_, r)| r.clone())
            .collect();
        prop_assert_eq!(extract_events(&thinned, &doc.events), full);
    }
}

#[test]
fn traces_number_records_in_order() {
    let doc = fm("parking_gate.fm");
    let t = run(&doc.model, &fm_input("cars.sched", None), 1000).unwrap();
    assert!(t
        .records
        .windows(2)
        .all(|w| w[0].seq < w[1].seq && w[0].time <= w[1].time));
}

#[test]
fn event_language_grows_with_depth() {
    let doc = fm("vending_control.fm");
    let g = explore(&doc.model, 10_000, 10_000).unwrap();
    for d in 0..6 {
        let a = event_language(&g, &doc.events, d);
        let b = event_language(&g, &doc.events, d + 1);
        assert!(prefix_closed(&a) && subset(&a, &b), "depth {d}");
    }
}

#[test]
fn enabled_timeouts_stay_enabled() {
    let doc = fm("timed_vending.fm");
    let t = run(&doc.model, &fm_input("none.sched", None), 50).unwrap();
    let mut s = t.final_state.clone();
    assert_eq!(
        s.clock("c1"),
        Some(ClockState {
            started: 0,
            deadline: 100
        })
    );
    let has_timeout = |s: &fmpn::exec::ExecState| {
        enabled_actions(s, &doc.model)
            .iter()
            .any(|a| matches!(a, Action::Timeout { clock } if clock == "c1"))
    };
    s.now = 100;
    assert!(!has_timeout(&s));
    for now in 101..105 {
        s.now = now;
        assert!(has_timeout(&s), "at {now}");
    }
}

#[test]
fn counterexamples_replay_on_one_side_only() {
    let net = net("vending_control.pn");
    let tr = translate(&net).unwrap();
    for trig in &tr.model.triggers {
        let mut m = tr.model.clone();
        m.triggers.retain(|t| t.id != trig.id);
        for g in &mut m.groups {
            g.members.retain(|x| x.element != trig.id);
        }
        let v = check_untimed(&net, &m, &tr.events, &tr.mapping, 6, Caps::default()).unwrap();
        let cx = v.counterexample.expect("mutant must differ");
        let word: Vec<&str> = cx.word.iter().map(String::as_str).collect();
        let in_net = firing_language(&net, 6).contains(&word);
        let in_fm = fm_language(&m, &tr.events, &tr.mapping, 6, Caps::default())
            .unwrap()
            .contains(&word);
        assert_eq!(in_net, cx.present_in == Side::Net, "{}", trig.id);
        assert_ne!(in_net, in_fm, "{}", trig.id);
    }
}

fn all_models() -> Vec<(String, FmModel)> {
    let mut out: Vec<(String, FmModel)> = FM_FIXTURES
        .iter()
        .map(|f| (f.to_string(), fm(f).model))
        .collect();
    for p in ["vending_control.pn", "vending_stock.pn"] {
        out.push((p.into(), translate(&net(p)).unwrap().model));
    }
    out
}

#[test]
fn structural_invariants_of_fixtures() {
    for (name, m) in all_models() {
        assert_eq!(
            validate(&simplify(&m, SimplifyLevel::Full)),
            validate(&m),
            "{name}"
        );
        for f in m.flows.iter().filter(|f| f.is_inter_machine()) {
            assert!(
                f.from.stage == Stage::Transfer && f.to.stage == Stage::Transfer,
                "{name}: {}",
                f.id
            );
        }
        for mach in &m.machines {
            assert_eq!(
                m.spheres.iter().filter(|s| **s == mach.sphere).count(),
                1,
                "{name}: {}",
                mach.id
            );
        }
    }
}

#[test]
fn fixture_schedules_conform() {
    let timed = mapping("timed.map");
    let cases: Vec<(&str, &str, Option<&fmpn::translate::EventMapping>)> = vec![
        ("parking_gate.fm", "cars.sched", None),
        ("vending.fm", "vend_exact.sched", None),
        ("vending.fm", "vend_change.sched", None),
        ("vending.fm", "vend_short.sched", None),
        ("timed_vending.fm", "none.sched", None),
        ("timed_vending.fm", TIMED_SCHEDULES[0], Some(&timed)),
        ("timed_vending.fm", TIMED_SCHEDULES[1], Some(&timed)),
        ("timed_vending.fm", TIMED_SCHEDULES[2], Some(&timed)),
        ("timed_vending.fm", TIMED_SCHEDULES[3], Some(&timed)),
    ];
    for (f, s, map) in cases {
        let doc = fm(f);
        let t = run(&doc.model, &fm_input(s, map), 300).unwrap();
        let (etrace, states) = extract_events_with_states(&doc.model, &t, &doc.events).unwrap();
        let gs = GuardStates {
            model: &doc.model,
            states: &states,
        };
        let c = conform(&etrace, doc.control.as_ref().unwrap(), Some(&gs));
        assert!(c.is_conformant(), "{f} {s}: {c:?} {:?}", etrace.ids());
    }
}
