//! Rebuilds the final state of a trace from its records alone.

use crate::fm::model::{FmModel, Power, Stage};

use super::record::{ActionKind, MicroStepRecord, ThingRecord};
use super::state::{init_state, ClockState, ExecState, Slot, Thing};
use super::ExecError;

fn bad(r: &MicroStepRecord, why: &str) -> ExecError {
    ExecError::Replay(format!("record {}: {why}", r.seq))
}

/// Parses `m.Stage`, `m.storage` or `env`.
fn parse_location(s: &str) -> Option<Option<(String, Option<Stage>)>> {
    if s == "env" {
        return Some(None);
    }
    let (m, rest) = s.rsplit_once('.')?;
    if rest == "storage" {
        return Some(Some((m.to_string(), None)));
    }
    Some(Some((m.to_string(), Some(Stage::parse(rest)?))))
}

fn new_thing(r: &MicroStepRecord) -> Result<Thing, ExecError> {
    match &r.thing {
        Some(ThingRecord {
            id,
            detail: Some((kind, attrs)),
        }) => Ok(Thing {
            id: *id,
            kind: kind.clone(),
            attrs: attrs.clone(),
        }),
        _ => Err(bad(r, "new thing without kind and attributes")),
    }
}

pub struct Replayer<'m> {
    pub model: &'m FmModel,
    pub state: ExecState,
}

impl<'m> Replayer<'m> {
    pub fn new(model: &'m FmModel) -> Result<Self, ExecError> {
        Ok(Replayer {
            model,
            state: init_state(model)?,
        })
    }

    pub fn apply(&mut self, r: &MicroStepRecord) -> Result<(), ExecError> {
        let st = &mut self.state;
        st.now = r.time;
        let el = |i: usize| {
            r.elements
                .get(i)
                .map(String::as_str)
                .ok_or_else(|| bad(r, "missing element"))
        };
        match r.action {
            ActionKind::Injection | ActionKind::Create => {
                let loc = el(r.elements.len().saturating_sub(1))?;
                let Some(Some((m, Some(stage)))) = parse_location(loc) else {
                    return Err(bad(r, "bad location"));
                };
                let thing = new_thing(r)?;
                st.next_id = st.next_id.max(thing.id + 1);
                st.put(&m, Slot::arriving(stage, true), thing);
            }
            ActionKind::Move | ActionKind::Park | ActionKind::Unpark => {
                let id = r.thing.as_ref().ok_or_else(|| bad(r, "no thing"))?.id;
                let (from_m, from_slot) = st.locate(id).ok_or_else(|| bad(r, "thing not found"))?;
                let thing = st.take(&from_m, from_slot, id).expect("located");
                let loc = el(r.elements.len() - 1)?;
                match parse_location(loc).ok_or_else(|| bad(r, "bad location"))? {
                    None => st.environment.push(thing),
                    Some((m, None)) => st.put(&m, Slot::Storage, thing),
                    Some((m, Some(stage))) => {
                        let inbound = m != from_m;
                        st.put(&m, Slot::arriving(stage, inbound), thing);
                    }
                }
            }
            ActionKind::PowerChange => {
                let power = match el(2)? {
                    "on" => Power::On,
                    "off" => Power::Off,
                    _ => return Err(bad(r, "bad power value")),
                };
                st.power.insert(el(1)?.to_string(), power);
            }
            ActionKind::ClockStart => {
                let deadline = el(2)?
                    .strip_prefix("until=")
                    .and_then(|d| d.parse().ok())
                    .ok_or_else(|| bad(r, "bad deadline"))?;
                st.clocks.insert(
                    el(1)?.to_string(),
                    Some(ClockState {
                        started: r.time,
                        deadline,
                    }),
                );
            }
            ActionKind::ClockStop => {
                st.clocks.insert(el(1)?.to_string(), None);
            }
            ActionKind::Timeout => {
                st.clocks.insert(el(0)?.to_string(), None);
            }
            ActionKind::TriggerFire | ActionKind::Group => {}
        }
        Ok(())
    }
}

/// Executes the records from the initial state and returns the result.
pub fn replay(model: &FmModel, records: &[MicroStepRecord]) -> Result<ExecState, ExecError> {
    let mut rp = Replayer::new(model)?;
    for r in records {
        rp.apply(r)?;
    }
    Ok(rp.state)
}
