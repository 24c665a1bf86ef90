//! Text formats: FM models, nets, mappings, schedules and DOT output.

mod dot;
mod expr;
mod fm_text;
mod lex;
mod mapping;
mod pn_text;

pub use dot::{render_fm, render_graph, render_net};
pub use expr::parse_expr;
pub use fm_text::{parse_fm, print_fm, FmDocument};
pub use lex::{Diagnostics, ParseError, SourceSpan};
pub use mapping::{parse_mapping, parse_schedule, print_mapping, Schedule, ScheduleItem};
pub use pn_text::{parse_pn, parse_pnml, print_pn};

use crate::exec::MicroStepRecord;

/// Reads a trace written by `Trace::to_text`.
pub fn parse_trace(text: &str) -> Result<Vec<MicroStepRecord>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| l.parse().map_err(|e| format!("line {}: {e}", n + 1)))
        .collect()
}
