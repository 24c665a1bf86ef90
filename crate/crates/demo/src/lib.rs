//! Browser bindings: timed vending runs, the priced vending machine and
//! model drawings.

use std::fmt::Write as _;

use wasm_bindgen::prelude::*;

use fmpn::events::{conform, extract_events, extract_events_with_states, GuardStates};
use fmpn::exec::{run, Injection, InputSchedule};
use fmpn::fm::{validate, SimplifyLevel, Value};
use fmpn::io::{parse_fm, parse_mapping, parse_schedule, render_fm, FmDocument};

const TIMED_VENDING: &str = include_str!("../../core/fixtures/timed_vending.fm");
const TIMED_MAP: &str = include_str!("../../core/fixtures/timed.map");
const VENDING: &str = include_str!("../../core/fixtures/vending.fm");
const PARKING_GATE: &str = include_str!("../../core/fixtures/parking_gate.fm");

fn load(text: &str) -> Result<FmDocument, String> {
    let doc = parse_fm(text).map_err(|d| d.to_string())?;
    let report = validate(&doc.model);
    if !report.is_valid() {
        return Err(report.to_string());
    }
    Ok(doc)
}

fn conformance(doc: &FmDocument, t: &fmpn::exec::Trace) -> Result<String, String> {
    let Some(control) = &doc.control else {
        return Ok("no control graph".into());
    };
    let (etrace, states) =
        extract_events_with_states(&doc.model, t, &doc.events).map_err(|e| e.to_string())?;
    let gs = GuardStates {
        model: &doc.model,
        states: &states,
    };
    Ok(match conform(&etrace, control, Some(&gs)) {
        fmpn::events::Conformance::Conformant => "conformant".into(),
        fmpn::events::Conformance::Violation { index, expected } => {
            let exp: Vec<&str> = expected.iter().map(String::as_str).collect();
            format!(
                "violation at occurrence {index}, expected one of {}",
                exp.join(" ")
            )
        }
    })
}

/// Fixture text for the editor.
#[wasm_bindgen]
pub fn parking_gate_source() -> String {
    PARKING_GATE.to_string()
}

/// Runs the timed vending machine on a schedule of `at <t> fire start|coin`
/// lines and reports events, power and clocks.
#[wasm_bindgen]
pub fn timed_vending(schedule: &str, horizon: u32) -> Result<String, String> {
    let doc = load(TIMED_VENDING)?;
    let mapping = parse_mapping(TIMED_MAP).map_err(|d| d.to_string())?;
    let sched = parse_schedule(schedule).map_err(|d| d.to_string())?;
    let input = sched.to_fm(Some(&mapping))?;
    let t = run(&doc.model, &input, u64::from(horizon)).map_err(|e| e.to_string())?;
    let mut out = String::new();
    for (e, time) in &extract_events(&t.records, &doc.events).occurrences {
        let _ = writeln!(out, "{time:>5}  {e}");
    }
    let s = &t.final_state;
    let _ = writeln!(out, "\ncoins power {}", s.power_of("coins").name());
    for c in ["c1", "c2"] {
        match s.clock(c) {
            Some(k) => {
                let _ = writeln!(
                    out,
                    "clock {c} running, started {} deadline {}",
                    k.started, k.deadline
                );
            }
            None => {
                let _ = writeln!(out, "clock {c} stopped");
            }
        }
    }
    let _ = writeln!(out, "coins stored {}", s.stored("coins").len());
    let _ = writeln!(out, "{}", conformance(&doc, &t)?);
    Ok(out)
}

/// Inserts coins (comma separated values), then selects `quantity` items
/// priced 5 each.
#[wasm_bindgen]
pub fn vend(coins: &str, quantity: u32) -> Result<String, String> {
    let doc = load(VENDING)?;
    let mut inj = Vec::new();
    for (i, c) in coins
        .split(',')
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .enumerate()
    {
        let v: i64 = c
            .parse()
            .map_err(|_| format!("`{c}` is not a coin value"))?;
        inj.push(Injection {
            time: i as u64 + 1,
            machine: "coins".into(),
            stage: None,
            attrs: [("value".to_string(), Value::Int(v))].into(),
        });
    }
    let at = inj.len() as u64 + 10;
    inj.push(Injection {
        time: at,
        machine: "selector".into(),
        stage: None,
        attrs: [("quantity".to_string(), Value::Int(i64::from(quantity)))].into(),
    });
    let input = InputSchedule::new(inj).map_err(|e| e.to_string())?;
    let t = run(&doc.model, &input, 1000).map_err(|e| e.to_string())?;
    let s = &t.final_state;
    let mut out = String::new();
    let ids = extract_events(&t.records, &doc.events);
    let _ = writeln!(out, "events {}", ids.ids().join(" "));
    let products = s.environment.iter().filter(|x| x.kind == "item").count();
    let _ = writeln!(
        out,
        "product released: {}",
        if products > 0 { "yes" } else { "no" }
    );
    for c in s.environment.iter().filter(|x| x.kind == "change") {
        let amount = c
            .attrs
            .get("amount")
            .map(ToString::to_string)
            .unwrap_or_default();
        let _ = writeln!(out, "change returned: {amount}");
    }
    let _ = writeln!(out, "coins stored {}", s.stored("coins").len());
    let _ = writeln!(out, "{}", conformance(&doc, &t)?);
    Ok(out)
}

/// DOT text for a model at `full`, `no-transport` or `create-process`.
#[wasm_bindgen]
pub fn render(model: &str, level: &str) -> Result<String, String> {
    let level = SimplifyLevel::parse(level).ok_or_else(|| format!("unknown level `{level}`"))?;
    let doc = parse_fm(model).map_err(|d| d.to_string())?;
    Ok(render_fm(&doc.model, level))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timed_coin_at_limit() {
        let out = timed_vending("at 0 fire start\nat 100 fire coin\n", 120).unwrap();
        assert!(out.contains("E6"), "{out}");
        assert!(
            out.contains("clock c2 running, started 100 deadline 160"),
            "{out}"
        );
    }

    #[test]
    fn change_and_product() {
        let out = vend("10, 2", 2).unwrap();
        assert!(out.contains("product released: yes"));
        assert!(out.contains("change returned: 2"));
        assert!(out.contains("conformant"));
        assert!(vend("5", 2).unwrap().contains("product released: no"));
        assert!(vend("x", 1).is_err());
    }

    #[test]
    fn drawing_levels() {
        let full = render(PARKING_GATE, "full").unwrap();
        let cp = render(PARKING_GATE, "create-process").unwrap();
        assert!(full.contains("\"before.Receive\""));
        assert!(!cp.contains("\"before.Receive\""));
        assert!(render(PARKING_GATE, "nope").is_err());
    }
}
