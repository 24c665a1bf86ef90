//! Bounded behavioural equivalence between a net and an FM model.

use std::fmt;

use crate::events::{extract_events, EventSet};
use crate::exec::{explore, run, ExecError, Injection, InputSchedule};
use crate::fm::model::FmModel;
use crate::graph::Language;
use crate::pn::{firing_language, timed_run, Net, Stimulus, TimedError};
use crate::translate::{map_trace, EventMapping, TranslateError};

#[derive(Debug, thiserror::Error)]
pub enum EquivError {
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Timed(#[from] TimedError),
    #[error(transparent)]
    Mapping(#[from] TranslateError),
    #[error("no injection point for external `{0}`")]
    NoExternal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Net,
    Fm,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Net => "net",
            Side::Fm => "fm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    /// Transition names, FM events translated through the mapping.
    pub word: Vec<String>,
    pub present_in: Side,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Equal,
    Unequal,
    Inconclusive,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Equal => 0,
            Outcome::Unequal => 1,
            Outcome::Inconclusive => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub equal: bool,
    pub depth: usize,
    pub counterexample: Option<Counterexample>,
    pub net_truncated: bool,
    pub fm_truncated: bool,
}

impl Verdict {
    pub fn outcome(&self) -> Outcome {
        if self.equal {
            Outcome::Equal
        } else if self.counterexample.is_some() {
            Outcome::Unequal
        } else {
            Outcome::Inconclusive
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.outcome() {
            Outcome::Equal => write!(f, "equal up to depth {}", self.depth)?,
            Outcome::Unequal => {
                let c = self.counterexample.as_ref().expect("unequal has a witness");
                let w = if c.word.is_empty() {
                    "ε".to_string()
                } else {
                    c.word.join("·")
                };
                write!(
                    f,
                    "unequal at depth {}: {w} only in {}",
                    self.depth, c.present_in
                )?;
            }
            Outcome::Inconclusive => write!(f, "inconclusive at depth {}", self.depth)?,
        }
        if self.fm_truncated {
            write!(f, " (fm exploration truncated)")?;
        }
        if self.net_truncated {
            write!(f, " (net exploration truncated)")?;
        }
        Ok(())
    }
}

/// Exploration limit for the FM side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub max_states: usize,
    pub max_steps: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_states: 100_000,
            max_steps: usize::MAX,
        }
    }
}

/// Event words of the FM model, written in transition names. Events without
/// a transition are silent.
pub fn fm_language(
    fm: &FmModel,
    events: &EventSet,
    mapping: &EventMapping,
    depth: usize,
    caps: Caps,
) -> Result<Language, ExecError> {
    let graph = explore(fm, caps.max_steps, caps.max_states)?;
    Ok(graph.language(depth, |edge| {
        edge.subjects
            .iter()
            .filter_map(|el| events.by_anchor(el))
            .filter_map(|e| mapping.transition_of(&e.id))
            .map(str::to_string)
            .collect()
    }))
}

/// Shortest, then lexicographically first, word in `a` but not in `b`.
fn first_missing(a: &Language, b: &Language) -> Option<Vec<String>> {
    a.words
        .iter()
        .filter(|w| !b.words.contains(*w))
        .min_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)))
        .cloned()
}

pub fn compare(net_lang: &Language, fm_lang: &Language, depth: usize) -> Verdict {
    let fm_only = first_missing(fm_lang, net_lang);
    let net_only = first_missing(net_lang, fm_lang);
    // A word missing from a lower-bound language proves nothing.
    let definite = |w: Option<Vec<String>>, present_in: Side, other_partial: bool| {
        w.filter(|_| !other_partial)
            .map(|word| Counterexample { word, present_in })
    };
    let fm_cx = definite(fm_only, Side::Fm, net_lang.lower_bound);
    let net_cx = definite(net_only, Side::Net, fm_lang.lower_bound);
    let counterexample = match (net_cx, fm_cx) {
        (Some(a), Some(b)) => Some(if (b.word.len(), &b.word) < (a.word.len(), &a.word) {
            b
        } else {
            a
        }),
        (a, b) => a.or(b),
    };
    let equal = counterexample.is_none()
        && net_lang.words == fm_lang.words
        && !net_lang.lower_bound
        && !fm_lang.lower_bound;
    Verdict {
        equal,
        depth,
        counterexample,
        net_truncated: net_lang.lower_bound,
        fm_truncated: fm_lang.lower_bound,
    }
}

/// Compares the net's firing language with the FM model's event language
/// under the mapping, both cut at `depth`.
pub fn check_untimed(
    net: &Net,
    fm: &FmModel,
    events: &EventSet,
    mapping: &EventMapping,
    depth: usize,
    caps: Caps,
) -> Result<Verdict, EquivError> {
    mapping.check_total(net)?;
    let net_lang = firing_language(net, depth);
    let fm_lang = fm_language(fm, events, mapping, depth, caps)?;
    Ok(compare(&net_lang, &fm_lang, depth))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleMismatch {
    pub schedule: usize,
    pub net: Vec<String>,
    pub fm: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedVerdict {
    pub schedules: usize,
    pub mismatches: Vec<ScheduleMismatch>,
}

impl TimedVerdict {
    pub fn equal(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn outcome(&self) -> Outcome {
        if self.equal() {
            Outcome::Equal
        } else {
            Outcome::Unequal
        }
    }
}

impl fmt::Display for TimedVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.equal() {
            return write!(f, "equal on {} schedules", self.schedules);
        }
        write!(
            f,
            "unequal on {} of {} schedules",
            self.mismatches.len(),
            self.schedules
        )?;
        for m in &self.mismatches {
            write!(
                f,
                "\n  schedule {}: net [{}] fm [{}]",
                m.schedule,
                m.net.join(" "),
                m.fm.join(" ")
            )?;
        }
        Ok(())
    }
}

/// FM-side schedule for net stimuli, through the mapping's injection points.
pub fn fm_schedule(
    stimuli: &[Stimulus],
    mapping: &EventMapping,
) -> Result<InputSchedule, EquivError> {
    let mut injections = Vec::new();
    for s in stimuli {
        let x = mapping
            .external(&s.name)
            .ok_or_else(|| EquivError::NoExternal(s.name.clone()))?;
        injections.push(Injection {
            time: s.time,
            machine: x.machine.clone(),
            stage: x.stage,
            attrs: x.attrs.clone(),
        });
    }
    Ok(InputSchedule::new(injections)?)
}

/// Runs both sides on every schedule and compares the mapped event
/// sequences. Times only order the events: FM timeouts fire one second
/// after their deadline, so the FM run gets one extra second of horizon.
pub fn check_timed(
    net: &Net,
    fm: &FmModel,
    events: &EventSet,
    mapping: &EventMapping,
    schedules: &[Vec<Stimulus>],
    horizon: u64,
) -> Result<TimedVerdict, EquivError> {
    mapping.check_total(net)?;
    let mut mismatches = Vec::new();
    for (i, stimuli) in schedules.iter().enumerate() {
        let stimuli: Vec<Stimulus> = stimuli
            .iter()
            .filter(|s| s.time <= horizon)
            .cloned()
            .collect();
        let net_seq: Vec<String> = map_trace(&timed_run(net, &stimuli, horizon)?, mapping)?
            .ids()
            .into_iter()
            .map(str::to_string)
            .collect();
        let trace = run(fm, &fm_schedule(&stimuli, mapping)?, horizon + 1)?;
        let fm_seq: Vec<String> = extract_events(&trace.records, events)
            .ids()
            .into_iter()
            .filter(|e| mapping.transition_of(e).is_some())
            .map(str::to_string)
            .collect();
        if net_seq != fm_seq {
            mismatches.push(ScheduleMismatch {
                schedule: i,
                net: net_seq,
                fm: fm_seq,
            });
        }
    }
    Ok(TimedVerdict {
        schedules: schedules.len(),
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lang(words: &[&[&str]], lower_bound: bool) -> Language {
        Language {
            words: words
                .iter()
                .map(|w| w.iter().map(|s| s.to_string()).collect())
                .collect(),
            lower_bound,
        }
    }

    #[test]
    fn shortest_difference_is_reported() {
        let net = lang(&[&[], &["a"], &["a", "b"], &["a", "c"]], false);
        let fm = lang(&[&[], &["a"], &["a", "b"]], false);
        let v = compare(&net, &fm, 2);
        assert_eq!(v.outcome(), Outcome::Unequal);
        let c = v.counterexample.unwrap();
        assert_eq!(
            (c.word, c.present_in),
            (vec!["a".to_string(), "c".to_string()], Side::Net)
        );
    }

    #[test]
    fn partial_side_cannot_witness_absence() {
        let net = lang(&[&[], &["a"]], false);
        let fm = lang(&[&[]], true);
        let v = compare(&net, &fm, 1);
        assert_eq!(v.outcome(), Outcome::Inconclusive);
        assert!(v.fm_truncated);

        let extra = lang(&[&[], &["z"]], true);
        assert_eq!(
            compare(&net, &extra, 1).counterexample.unwrap().present_in,
            Side::Fm
        );
    }

    #[test]
    fn equal_languages() {
        let a = lang(&[&[], &["a"]], false);
        assert_eq!(compare(&a, &a, 1).outcome(), Outcome::Equal);
    }
}
