use std::fmt;
use std::str::FromStr;

use crate::fm::model::{Attrs, Value};

use super::state::ThingId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActionKind {
    Move,
    Create,
    Park,
    Unpark,
    TriggerFire,
    PowerChange,
    ClockStart,
    ClockStop,
    Timeout,
    Injection,
    Group,
}

impl ActionKind {
    pub const ALL: [ActionKind; 11] = [
        ActionKind::Move,
        ActionKind::Create,
        ActionKind::Park,
        ActionKind::Unpark,
        ActionKind::TriggerFire,
        ActionKind::PowerChange,
        ActionKind::ClockStart,
        ActionKind::ClockStop,
        ActionKind::Timeout,
        ActionKind::Injection,
        ActionKind::Group,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Move => "move",
            ActionKind::Create => "create",
            ActionKind::Park => "park",
            ActionKind::Unpark => "unpark",
            ActionKind::TriggerFire => "trigger-fire",
            ActionKind::PowerChange => "power-change",
            ActionKind::ClockStart => "clock-start",
            ActionKind::ClockStop => "clock-stop",
            ActionKind::Timeout => "timeout",
            ActionKind::Injection => "injection",
            ActionKind::Group => "group",
        }
    }
}

impl FromStr for ActionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown action kind `{s}`"))
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The thing a record talks about. New things (injected or created) carry
/// their kind and attributes so a trace can be replayed on its own.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThingRecord {
    pub id: ThingId,
    pub detail: Option<(String, Attrs)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MicroStepRecord {
    pub seq: u64,
    pub time: u64,
    pub action: ActionKind,
    pub elements: Vec<String>,
    pub thing: Option<ThingRecord>,
}

impl MicroStepRecord {
    pub(crate) fn new(
        time: u64,
        action: ActionKind,
        elements: Vec<String>,
        thing: Option<ThingRecord>,
    ) -> Self {
        MicroStepRecord {
            seq: 0,
            time,
            action,
            elements,
            thing,
        }
    }
}

pub fn format_attrs(attrs: &Attrs) -> String {
    let parts: Vec<String> = attrs.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{{{}}}", parts.join(","))
}

/// One line, tab separated: `seq time action elements thing`.
impl fmt::Display for MicroStepRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let elements = if self.elements.is_empty() {
            "-".to_string()
        } else {
            self.elements.join(",")
        };
        write!(
            f,
            "{}\t{}\t{}\t{}\t",
            self.seq, self.time, self.action, elements
        )?;
        match &self.thing {
            None => f.write_str("-"),
            Some(ThingRecord { id, detail: None }) => write!(f, "{id}"),
            Some(ThingRecord {
                id,
                detail: Some((kind, attrs)),
            }) => write!(f, "{id}:{kind}{}", format_attrs(attrs)),
        }
    }
}

fn parse_value(s: &str) -> Result<Value, String> {
    if let Some(inner) = s.strip_prefix('"').and_then(|r| r.strip_suffix('"')) {
        return Ok(Value::Str(inner.to_string()));
    }
    s.parse::<i64>()
        .map(Value::Int)
        .map_err(|_| format!("bad attribute value `{s}`"))
}

fn parse_thing(s: &str) -> Result<Option<ThingRecord>, String> {
    if s == "-" {
        return Ok(None);
    }
    let Some((id, rest)) = s.split_once(':') else {
        let id = s.parse().map_err(|_| format!("bad thing id `{s}`"))?;
        return Ok(Some(ThingRecord { id, detail: None }));
    };
    let id = id.parse().map_err(|_| format!("bad thing id `{id}`"))?;
    let brace = rest.find('{').ok_or("missing attribute block")?;
    let kind = rest[..brace].to_string();
    let body = rest[brace..]
        .strip_prefix('{')
        .and_then(|b| b.strip_suffix('}'))
        .ok_or("unterminated attribute block")?;
    let mut attrs = Attrs::new();
    if !body.is_empty() {
        for part in body.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| format!("bad attribute `{part}`"))?;
            attrs.insert(k.to_string(), parse_value(v)?);
        }
    }
    Ok(Some(ThingRecord {
        id,
        detail: Some((kind, attrs)),
    }))
}

impl FromStr for MicroStepRecord {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let fields: Vec<&str> = line.split('\t').collect();
        let [seq, time, action, elements, thing] = fields[..] else {
            return Err(format!(
                "expected 5 tab-separated fields, found {}",
                fields.len()
            ));
        };
        Ok(MicroStepRecord {
            seq: seq.parse().map_err(|_| format!("bad seq `{seq}`"))?,
            time: time.parse().map_err(|_| format!("bad time `{time}`"))?,
            action: action.parse()?,
            elements: if elements == "-" {
                Vec::new()
            } else {
                elements.split(',').map(str::to_string).collect()
            },
            thing: parse_thing(thing)?,
        })
    }
}
