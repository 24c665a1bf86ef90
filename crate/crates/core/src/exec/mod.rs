//! Execution of flowthing machine models: stepping, runs, replay, exploration.

mod explore;
mod record;
mod replay;
mod run;
mod state;
mod step;

pub use explore::{canonical_key, explore, explore_from, FmEdge, FmNode, FmStateGraph, Liveness};
pub use record::{format_attrs, ActionKind, MicroStepRecord, ThingRecord};
pub use replay::{replay, Replayer};
pub use run::{run, Injection, InputSchedule, Trace, MAX_STEPS_PER_MOMENT};
pub use state::{
    init_state, init_state_unchecked, kind_for, slot_stage_ref, ClockState, ExecState,
    PendingTrigger, Slot, StateView, Thing, ThingId,
};
pub use step::{enabled_actions, step, Action, StepError, Via};

use crate::report::ValidationReport;

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error("invalid model:\n{0}")]
    InvalidModel(ValidationReport),
    #[error("bad schedule: {0}")]
    Schedule(String),
    #[error("run diverges at time {time}: {state}")]
    Divergence {
        time: u64,
        state: String,
        partial: Box<Trace>,
    },
    #[error("replay failed: {0}")]
    Replay(String),
    #[error("exploration needs an untimed model")]
    Timed,
}
