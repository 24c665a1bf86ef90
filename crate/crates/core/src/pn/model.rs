use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Place {
    pub id: String,
    pub capacity: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub id: String,
    /// Seconds between enabling and firing; only internal transitions use it.
    pub delay: Option<u64>,
    /// Fired by the environment through a schedule.
    pub external: bool,
    /// Alternative name a schedule may use; several transitions may share one.
    pub label: Option<String>,
}

impl Transition {
    pub fn new(id: impl Into<String>) -> Transition {
        Transition {
            id: id.into(),
            delay: None,
            external: false,
            label: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub from: String,
    pub to: String,
    pub weight: u32,
}

/// Whether firing requires the output places to be empty afterwards.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ContactRule {
    /// Enforced for elementary nets only.
    #[default]
    Auto,
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetClass {
    Elementary,
    PlaceTransition,
    Timed,
}

impl fmt::Display for NetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NetClass::Elementary => "elementary",
            NetClass::PlaceTransition => "place/transition",
            NetClass::Timed => "timed",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Net {
    pub places: Vec<Place>,
    pub transitions: Vec<Transition>,
    pub arcs: Vec<Arc>,
    pub initial: BTreeMap<String, u32>,
    pub contact: ContactRule,
}

/// Token counts; places without tokens are absent, so equal markings compare equal.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Marking(BTreeMap<String, u32>);

impl Marking {
    pub fn new() -> Marking {
        Marking::default()
    }

    pub fn get(&self, place: &str) -> u32 {
        self.0.get(place).copied().unwrap_or(0)
    }

    pub fn set(&mut self, place: &str, n: u32) {
        if n == 0 {
            self.0.remove(place);
        } else {
            self.0.insert(place.to_string(), n);
        }
    }

    pub fn total(&self) -> u64 {
        self.0.values().map(|&n| u64::from(n)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(p, &n)| (p.as_str(), n))
    }
}

impl FromIterator<(String, u32)> for Marking {
    fn from_iter<I: IntoIterator<Item = (String, u32)>>(iter: I) -> Self {
        let mut m = Marking::new();
        for (p, n) in iter {
            let n = m.get(&p) + n;
            m.set(&p, n);
        }
        m
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(p, n)| format!("{p}:{n}")).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl Net {
    pub fn place(&self, id: &str) -> Option<&Place> {
        self.places.iter().find(|p| p.id == id)
    }

    pub fn transition(&self, id: &str) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.id == id)
    }

    pub fn inputs<'a>(&'a self, t: &'a str) -> impl Iterator<Item = (&'a str, u32)> + 'a {
        self.arcs
            .iter()
            .filter(move |a| a.to == t)
            .map(|a| (a.from.as_str(), a.weight))
    }

    pub fn outputs<'a>(&'a self, t: &'a str) -> impl Iterator<Item = (&'a str, u32)> + 'a {
        self.arcs
            .iter()
            .filter(move |a| a.from == t)
            .map(|a| (a.to.as_str(), a.weight))
    }

    pub fn initial_marking(&self) -> Marking {
        self.initial.iter().map(|(p, &n)| (p.clone(), n)).collect()
    }

    /// Class by structure and delays; the initial marking counts for elementary nets.
    pub fn class(&self) -> NetClass {
        if self.transitions.iter().any(|t| t.delay.is_some()) {
            NetClass::Timed
        } else if self.is_elementary_structure() {
            NetClass::Elementary
        } else {
            NetClass::PlaceTransition
        }
    }

    fn is_elementary_structure(&self) -> bool {
        self.arcs.iter().all(|a| a.weight == 1)
            && self.places.iter().all(|p| p.capacity == Some(1))
            && self.initial.values().all(|&n| n <= 1)
    }

    pub fn uses_contact_rule(&self) -> bool {
        match self.contact {
            ContactRule::On => true,
            ContactRule::Off => false,
            ContactRule::Auto => self.class() == NetClass::Elementary,
        }
    }

    /// Transitions a schedule name refers to: by id if one matches, else by label.
    pub fn resolve(&self, name: &str) -> Vec<&Transition> {
        match self.transition(name) {
            Some(t) => vec![t],
            None => self
                .transitions
                .iter()
                .filter(|t| t.label.as_deref() == Some(name))
                .collect(),
        }
    }
}
