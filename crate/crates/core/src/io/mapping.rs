//! Mapping files (`map`, `place`, `external` lines) and schedule files.

use std::fmt::Write as _;

use crate::exec::{Injection, InputSchedule};
use crate::fm::model::Stage;
use crate::pn::Stimulus;
use crate::translate::{EventMapping, ExternalMapping, PlaceMapping};

use super::fm_text::attrs;
use super::lex::{lines, Cursor, Diagnostics, ParseError};

fn machine_stage(c: &mut Cursor) -> Result<(String, Option<Stage>), ParseError> {
    let m = c.ident("a machine id")?;
    if !c.eat_sym(".") {
        return Ok((m, None));
    }
    let s = c.ident("a stage")?;
    let stage = Stage::parse(&s)
        .ok_or_else(|| c.error_from(c.pos() - 1, format!("unknown stage `{s}`")))?;
    Ok((m, Some(stage)))
}

pub fn parse_mapping(text: &str) -> Result<EventMapping, Diagnostics> {
    let (cursors, mut errors) = lines(text);
    let mut pairs = Vec::new();
    let mut places = Vec::new();
    let mut externals = Vec::new();
    let mut first_span = None;
    for mut c in cursors {
        first_span.get_or_insert_with(|| c.span());
        let res = (|| {
            match c.ident("`map`, `place` or `external`")?.as_str() {
                "map" => {
                    let t = c.ident("a transition id")?;
                    pairs.push((t, c.ident("an event id")?));
                }
                "place" => {
                    let place = c.ident("a place id")?;
                    let machine = c.ident("a machine id")?;
                    let kind = if c.eat_kw("kind") {
                        c.ident("a thing kind")?
                    } else {
                        place.clone()
                    };
                    places.push(PlaceMapping {
                        place,
                        machine,
                        kind,
                    });
                }
                "external" => {
                    let name = c.ident("a transition name")?;
                    let (machine, stage) = machine_stage(&mut c)?;
                    externals.push(ExternalMapping {
                        name,
                        machine,
                        stage,
                        attrs: attrs(&mut c)?,
                    });
                }
                other => return Err(c.error_from(0, format!("unknown declaration `{other}`"))),
            }
            c.end()
        })();
        if let Err(e) = res {
            errors.push(e);
        }
    }
    if !errors.is_empty() {
        return Err(Diagnostics(errors));
    }
    let mut mapping = EventMapping::new(pairs).map_err(|e| {
        Diagnostics(vec![ParseError {
            span: first_span.clone().unwrap_or_default(),
            message: e.to_string(),
        }])
    })?;
    mapping.places = places;
    mapping.externals = externals;
    Ok(mapping)
}

pub fn print_mapping(m: &EventMapping) -> String {
    let mut out = String::new();
    for (t, e) in m.pairs() {
        let _ = writeln!(out, "map {t} {e}");
    }
    for p in &m.places {
        let _ = writeln!(out, "place {} {} kind {}", p.place, p.machine, p.kind);
    }
    for x in &m.externals {
        let _ = write!(out, "external {} {}", x.name, x.machine);
        if let Some(s) = x.stage {
            let _ = write!(out, ".{s}");
        }
        if !x.attrs.is_empty() {
            let parts: Vec<String> = x.attrs.iter().map(|(k, v)| format!("{k}: {v}")).collect();
            let _ = write!(out, " {{{}}}", parts.join(", "));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleItem {
    Inject(Injection),
    Fire(Stimulus),
}

impl ScheduleItem {
    pub fn time(&self) -> u64 {
        match self {
            ScheduleItem::Inject(i) => i.time,
            ScheduleItem::Fire(s) => s.time,
        }
    }
}

/// Environment input shared by both executors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schedule {
    pub items: Vec<ScheduleItem>,
}

impl Schedule {
    pub fn stimuli(&self) -> Vec<Stimulus> {
        self.items
            .iter()
            .filter_map(|i| match i {
                ScheduleItem::Fire(s) => Some(s.clone()),
                ScheduleItem::Inject(_) => None,
            })
            .collect()
    }

    /// FM input; `fire` lines go through the mapping's injection points.
    pub fn to_fm(&self, mapping: Option<&EventMapping>) -> Result<InputSchedule, String> {
        let mut out = Vec::new();
        for item in &self.items {
            match item {
                ScheduleItem::Inject(i) => out.push(i.clone()),
                ScheduleItem::Fire(s) => {
                    let x = mapping
                        .and_then(|m| m.external(&s.name))
                        .ok_or_else(|| format!("no injection point for `{}`", s.name))?;
                    out.push(Injection {
                        time: s.time,
                        machine: x.machine.clone(),
                        stage: x.stage,
                        attrs: x.attrs.clone(),
                    });
                }
            }
        }
        InputSchedule::new(out).map_err(|e| e.to_string())
    }
}

pub fn parse_schedule(text: &str) -> Result<Schedule, Diagnostics> {
    let (cursors, mut errors) = lines(text);
    let mut items: Vec<ScheduleItem> = Vec::new();
    for mut c in cursors {
        let res = (|| {
            c.expect_kw("at")?;
            let time = c.uint("a time")?;
            if let Some(last) = items.last() {
                if time < last.time() {
                    return Err(
                        c.error_from(1, format!("time {time} follows time {}", last.time()))
                    );
                }
            }
            let item = if c.eat_kw("fire") {
                ScheduleItem::Fire(Stimulus {
                    time,
                    name: c.ident("a transition name")?,
                })
            } else {
                c.expect_kw("inject")?;
                let (machine, stage) = machine_stage(&mut c)?;
                ScheduleItem::Inject(Injection {
                    time,
                    machine,
                    stage,
                    attrs: attrs(&mut c)?,
                })
            };
            c.end()?;
            items.push(item);
            Ok(())
        })();
        if let Err(e) = res {
            errors.push(e);
        }
    }
    if errors.is_empty() {
        Ok(Schedule { items })
    } else {
        Err(Diagnostics(errors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fm::model::Value;

    #[test]
    fn mapping_round_trip() {
        let text = "map insert E2\nmap reject E3\nplace ready P_ready kind ready\nexternal coin X_coin.Transfer {value: 5}\n";
        let m = parse_mapping(text).unwrap();
        assert_eq!(m.transition_of("E3"), Some("reject"));
        assert_eq!(m.external("coin").unwrap().attrs["value"], Value::Int(5));
        assert_eq!(parse_mapping(&print_mapping(&m)).unwrap(), m);
        assert!(parse_mapping("map a E1\nmap b E1\n").is_err());
    }

    #[test]
    fn schedules() {
        let s = parse_schedule("# cars\nat 1 inject car {n: 1}\nat 5 fire coin\n").unwrap();
        assert_eq!(s.items.len(), 2);
        assert_eq!(s.stimuli()[0].name, "coin");
        assert!(s.to_fm(None).is_err());
        let e = parse_schedule("at 5 fire a\nat 3 fire b\n").unwrap_err();
        assert_eq!(e.0[0].span.line, 2);
        assert!(parse_schedule("").unwrap().items.is_empty());
    }
}
