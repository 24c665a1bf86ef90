use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};

use crate::fm::model::{Attrs, FmModel, Stage};

use super::record::MicroStepRecord;
use super::state::{init_state, ExecState};
use super::step::{enabled_actions, step, Engine};
use super::ExecError;

/// Upper bound on micro-steps at one moment before a run is declared divergent.
pub const MAX_STEPS_PER_MOMENT: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Injection {
    pub time: u64,
    pub machine: String,
    /// `None` picks Transfer-in when the machine has a Transfer stage, else Create.
    pub stage: Option<Stage>,
    pub attrs: Attrs,
}

/// Environment input for a run. Times are non-decreasing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InputSchedule {
    injections: Vec<Injection>,
}

impl InputSchedule {
    pub fn new(injections: Vec<Injection>) -> Result<Self, ExecError> {
        if let Some(w) = injections.windows(2).find(|w| w[1].time < w[0].time) {
            return Err(ExecError::Schedule(format!(
                "time {} follows time {}",
                w[1].time, w[0].time
            )));
        }
        Ok(InputSchedule { injections })
    }

    pub fn injections(&self) -> &[Injection] {
        &self.injections
    }

    pub fn is_empty(&self) -> bool {
        self.injections.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub records: Vec<MicroStepRecord>,
    pub final_state: ExecState,
}

impl Trace {
    /// Line-delimited serialization, one record per line, LF terminated.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}

fn fingerprint(state: &ExecState) -> u64 {
    let mut h = DefaultHasher::new();
    state.placements.hash(&mut h);
    state.power.hash(&mut h);
    for (c, s) in &state.clocks {
        c.hash(&mut h);
        s.hash(&mut h);
    }
    state.pending.hash(&mut h);
    state.environment.hash(&mut h);
    h.finish()
}

fn resolve_stage(model: &FmModel, inj: &Injection) -> Result<Stage, ExecError> {
    let m = model
        .machine(&inj.machine)
        .ok_or_else(|| ExecError::Schedule(format!("unknown machine `{}`", inj.machine)))?;
    let stage = match inj.stage {
        Some(s) => s,
        None if m.has_stage(Stage::Transfer) => Stage::Transfer,
        None => Stage::Create,
    };
    if !matches!(stage, Stage::Transfer | Stage::Create) || !m.has_stage(stage) {
        return Err(ExecError::Schedule(format!(
            "cannot inject into `{}.{stage}`",
            inj.machine
        )));
    }
    Ok(stage)
}

/// Deterministic execution up to `horizon`.
///
/// At each moment with work: injections due now, then canonical-order actions
/// until quiescence. The clock then jumps to the next injection or to the first
/// second after the earliest deadline.
pub fn run(model: &FmModel, schedule: &InputSchedule, horizon: u64) -> Result<Trace, ExecError> {
    let mut state = init_state(model)?;
    for inj in schedule.injections() {
        resolve_stage(model, inj)?;
    }
    let mut records: Vec<MicroStepRecord> = Vec::new();
    let mut next = 0usize;
    let injections = schedule.injections();

    let push = |records: &mut Vec<MicroStepRecord>, new: Vec<MicroStepRecord>| {
        for mut r in new {
            r.seq = records.len() as u64;
            records.push(r);
        }
    };

    loop {
        while next < injections.len() && injections[next].time <= state.now {
            let inj = &injections[next];
            let stage = resolve_stage(model, inj)?;
            let mut eng = Engine::new(model, state);
            eng.inject(&inj.machine, stage, inj.attrs.clone());
            state = eng.state;
            push(&mut records, eng.records);
            next += 1;
        }

        let mut seen = HashSet::new();
        seen.insert(fingerprint(&state));
        let mut steps = 0usize;
        loop {
            let actions = enabled_actions(&state, model);
            let Some(action) = actions.first() else { break };
            let (st, recs) = step(&state, model, action).expect("enabled action applies");
            state = st;
            push(&mut records, recs);
            steps += 1;
            if !seen.insert(fingerprint(&state)) || steps > MAX_STEPS_PER_MOMENT {
                return Err(ExecError::Divergence {
                    time: state.now,
                    state: state.to_string(),
                    partial: Box::new(Trace {
                        records,
                        final_state: state,
                    }),
                });
            }
        }

        let next_injection = injections.get(next).map(|i| i.time);
        let next_timeout = state
            .clocks
            .values()
            .flatten()
            .map(|c| c.deadline + 1)
            .min();
        let upcoming = match (next_injection, next_timeout) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => break,
        };
        if upcoming > horizon {
            break;
        }
        state.now = upcoming.max(state.now);
    }

    Ok(Trace {
        records,
        final_state: state,
    })
}
