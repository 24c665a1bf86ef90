//! Flowthing machines and Petri nets: modelling, execution, translation and
//! behavioural equivalence checking.

pub mod equiv;
pub mod events;
pub mod exec;
pub mod fm;
pub mod graph;
pub mod io;
pub mod pn;
pub mod report;
pub mod translate;
