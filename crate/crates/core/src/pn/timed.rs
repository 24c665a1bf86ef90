use std::collections::BTreeMap;
use std::fmt;

use super::exec::{consume, fire, is_enabled};
use super::model::{Marking, Net};

const MAX_FIRINGS_PER_MOMENT: usize = 100_000;

/// Environment firing request for an external transition (by id or label).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stimulus {
    pub time: u64,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiredKind {
    Fired,
    /// The stimulus arrived while no matching transition was enabled.
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiredRecord {
    pub time: u64,
    pub transition: String,
    pub kind: FiredKind,
}

impl fmt::Display for FiredRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FiredKind::Fired => write!(f, "{}\tfire\t{}", self.time, self.transition),
            FiredKind::Dropped => write!(f, "{}\tdrop\t{}", self.time, self.transition),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TimedError {
    #[error("schedule names unknown external transition `{0}`")]
    UnknownTransition(String),
    #[error("schedule time {0} follows time {1}")]
    Unordered(u64, u64),
    #[error("zero-delay transitions keep firing at time {0}")]
    Divergence(u64),
}

fn internal(net: &Net) -> impl Iterator<Item = &str> {
    net.transitions
        .iter()
        .filter(|t| !t.external)
        .map(|t| t.id.as_str())
}

fn delay(net: &Net, t: &str) -> u64 {
    net.transition(t).and_then(|t| t.delay).unwrap_or(0)
}

/// Enabling times of internal transitions after `t` fired from `before`.
/// A transition disabled at the intermediate marking restarts its clock.
fn update_clocks(
    net: &Net,
    since: &mut BTreeMap<String, u64>,
    before: &Marking,
    t: &str,
    after: &Marking,
    now: u64,
) {
    let mid = consume(net, before, t);
    for u in internal(net) {
        if !is_enabled(net, after, u) {
            since.remove(u);
        } else if u == t || !is_enabled(net, &mid, u) || !since.contains_key(u) {
            since.insert(u.to_string(), now);
        }
    }
}

/// Timed execution: internal transitions fire `delay` seconds after their
/// latest enabling, externals fire when scheduled. At equal times external
/// stimuli go first, then internal transitions in declaration order.
pub fn timed_run(
    net: &Net,
    schedule: &[Stimulus],
    horizon: u64,
) -> Result<Vec<FiredRecord>, TimedError> {
    for w in schedule.windows(2) {
        if w[1].time < w[0].time {
            return Err(TimedError::Unordered(w[1].time, w[0].time));
        }
    }
    for s in schedule {
        if !net.resolve(&s.name).iter().any(|t| t.external) {
            return Err(TimedError::UnknownTransition(s.name.clone()));
        }
    }

    let mut m = net.initial_marking();
    let mut since: BTreeMap<String, u64> = internal(net)
        .filter(|t| is_enabled(net, &m, t))
        .map(|t| (t.to_string(), 0))
        .collect();
    let mut out = Vec::new();
    let mut next = 0usize;
    let mut moment = (0u64, 0usize);

    loop {
        let due = internal(net)
            .filter_map(|t| since.get(t).map(|s| (s + delay(net, t), t)))
            .min_by_key(|(at, _)| *at);
        let ext = schedule.get(next).map(|s| s.time);
        let (now, fired) = match (ext, due) {
            (Some(te), Some((ti, _))) if te <= ti => (te, None),
            (Some(te), None) => (te, None),
            (_, Some((ti, t))) => (ti, Some(t.to_string())),
            (None, None) => break,
        };
        if now > horizon {
            break;
        }
        if moment.0 == now {
            moment.1 += 1;
            if moment.1 > MAX_FIRINGS_PER_MOMENT {
                return Err(TimedError::Divergence(now));
            }
        } else {
            moment = (now, 1);
        }

        let t = match fired {
            Some(t) => t,
            None => {
                let s = &schedule[next];
                next += 1;
                let candidate = net
                    .resolve(&s.name)
                    .into_iter()
                    .find(|t| t.external && is_enabled(net, &m, &t.id));
                match candidate {
                    Some(t) => t.id.clone(),
                    None => {
                        out.push(FiredRecord {
                            time: now,
                            transition: s.name.clone(),
                            kind: FiredKind::Dropped,
                        });
                        continue;
                    }
                }
            }
        };
        let after = fire(net, &m, &t).expect("enabled");
        update_clocks(net, &mut since, &m, &t, &after, now);
        m = after;
        out.push(FiredRecord {
            time: now,
            transition: t,
            kind: FiredKind::Fired,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::model::{Arc, Place, Transition};
    use super::*;

    /// idle --start--> waiting --timeout(100)--> idle; waiting --coin--> idle.
    fn budget() -> Net {
        let arc = |a: &str, b: &str| Arc {
            from: a.into(),
            to: b.into(),
            weight: 1,
        };
        let place = |id: &str| Place {
            id: id.into(),
            capacity: Some(1),
        };
        let mut start = Transition::new("start");
        start.external = true;
        let mut coin = Transition::new("coin");
        coin.external = true;
        let mut timeout = Transition::new("timeout");
        timeout.delay = Some(100);
        let mut net = Net {
            places: vec![place("idle"), place("waiting")],
            transitions: vec![start, coin, timeout],
            arcs: vec![
                arc("idle", "start"),
                arc("start", "waiting"),
                arc("waiting", "coin"),
                arc("coin", "idle"),
                arc("waiting", "timeout"),
                arc("timeout", "idle"),
            ],
            ..Net::default()
        };
        net.initial.insert("idle".into(), 1);
        net
    }

    fn at(time: u64, name: &str) -> Stimulus {
        Stimulus {
            time,
            name: name.into(),
        }
    }

    fn fired(recs: &[FiredRecord]) -> Vec<(u64, &str)> {
        recs.iter()
            .filter(|r| r.kind == FiredKind::Fired)
            .map(|r| (r.time, r.transition.as_str()))
            .collect()
    }

    #[test]
    fn timeout_fires_after_its_delay() {
        let recs = timed_run(&budget(), &[at(0, "start")], 1000).unwrap();
        assert_eq!(fired(&recs), vec![(0, "start"), (100, "timeout")]);
    }

    #[test]
    fn coin_in_time_prevents_the_timeout() {
        let recs = timed_run(&budget(), &[at(0, "start"), at(99, "coin")], 1000).unwrap();
        assert_eq!(fired(&recs), vec![(0, "start"), (99, "coin")]);
    }

    #[test]
    fn late_coin_is_dropped() {
        let recs = timed_run(&budget(), &[at(0, "start"), at(150, "coin")], 1000).unwrap();
        assert_eq!(recs.last().unwrap().kind, FiredKind::Dropped);
        assert_eq!(fired(&recs).len(), 2);
    }

    #[test]
    fn external_wins_a_tie() {
        let recs = timed_run(&budget(), &[at(0, "start"), at(100, "coin")], 1000).unwrap();
        assert_eq!(fired(&recs), vec![(0, "start"), (100, "coin")]);
    }

    #[test]
    fn nothing_to_do() {
        assert!(timed_run(&Net::default(), &[], 100).unwrap().is_empty());
        assert_eq!(
            timed_run(&budget(), &[at(0, "nope")], 10),
            Err(TimedError::UnknownTransition("nope".into()))
        );
    }
}
