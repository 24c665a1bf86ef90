//! Petri nets: elementary, place/transition and timed.

mod exec;
mod model;
mod timed;
mod validate;

pub use exec::{
    consume, enabled, fire, firing_language, is_enabled, reachability, FireError, PnStateGraph,
};
pub use model::{Arc, ContactRule, Marking, Net, NetClass, Place, Transition};
pub use timed::{timed_run, FiredKind, FiredRecord, Stimulus, TimedError};
pub use validate::{class_of, validate_net, InvalidNet};
