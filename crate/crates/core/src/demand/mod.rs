//! Agents, activity chains and mode availability.

mod generate;
mod population;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{LinkId, Network};

pub use generate::{generate_scenario, ChainTemplate, GeneratedScenario, Locations, Preset, CHAIN_CATALOG};
pub use population::{read_population, write_population, POPULATION_FORMAT_VERSION};

pub const HOUR: u32 = 3600;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl AgentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Car,
    Pt,
    WalkBike,
    Av,
    Sav,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Car, Mode::Pt, Mode::WalkBike, Mode::Av, Mode::Sav];

    /// Modes that move vehicles through the queue network.
    pub fn is_network(self) -> bool {
        matches!(self, Mode::Car | Mode::Av | Mode::Sav)
    }

    /// Network modes whose route is part of the agent's plan.
    pub fn is_private_vehicle(self) -> bool {
        matches!(self, Mode::Car | Mode::Av)
    }

    pub fn is_automated(self) -> bool {
        matches!(self, Mode::Av | Mode::Sav)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Car => "car",
            Mode::Pt => "pt",
            Mode::WalkBike => "walk_bike",
            Mode::Av => "av",
            Mode::Sav => "sav",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Set of modes an agent may use.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<Mode>", into = "Vec<Mode>")]
pub struct ModeSet(u8);

impl ModeSet {
    pub fn new(modes: &[Mode]) -> Self {
        modes.iter().copied().collect()
    }

    pub fn contains(self, mode: Mode) -> bool {
        self.0 & mode.bit() != 0
    }

    pub fn insert(&mut self, mode: Mode) {
        self.0 |= mode.bit();
    }

    pub fn remove(&mut self, mode: Mode) {
        self.0 &= !mode.bit();
    }

    pub fn iter(self) -> impl Iterator<Item = Mode> {
        Mode::ALL.into_iter().filter(move |m| self.contains(*m))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl FromIterator<Mode> for ModeSet {
    fn from_iter<I: IntoIterator<Item = Mode>>(iter: I) -> Self {
        let mut set = ModeSet::default();
        for m in iter {
            set.insert(m);
        }
        set
    }
}

impl From<Vec<Mode>> for ModeSet {
    fn from(v: Vec<Mode>) -> Self {
        v.into_iter().collect()
    }
}

impl From<ModeSet> for Vec<Mode> {
    fn from(s: ModeSet) -> Self {
        s.iter().collect()
    }
}

impl fmt::Debug for ModeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityKind {
    Home,
    Education,
    Work,
    Shopping,
    Leisure,
}

impl ActivityKind {
    pub const ALL: [ActivityKind; 5] = [
        ActivityKind::Home,
        ActivityKind::Education,
        ActivityKind::Work,
        ActivityKind::Shopping,
        ActivityKind::Leisure,
    ];
}

/// Scoring attributes of an activity type. Times are seconds since midnight
/// and may exceed 24 h for venues open past midnight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivityType {
    pub kind: ActivityKind,
    /// Typical duration, hours.
    pub typical_duration: f64,
    pub opening: Option<u32>,
    pub closing: Option<u32>,
    /// Arrivals after this time pay the lateness penalty.
    #[serde(default)]
    pub latest_start: Option<u32>,
}

impl ActivityType {
    /// Default out-of-home activity attributes.
    pub fn defaults() -> Vec<ActivityType> {
        let t = |kind, typical_duration, opening: Option<u32>, closing: Option<u32>| ActivityType {
            kind,
            typical_duration,
            opening,
            closing,
            latest_start: None,
        };
        vec![
            t(ActivityKind::Home, 14.0, None, None),
            t(ActivityKind::Education, 5.0, Some(8 * HOUR), Some(22 * HOUR)),
            t(ActivityKind::Work, 7.0, Some(7 * HOUR), None),
            t(ActivityKind::Shopping, 1.0, Some(9 * HOUR), Some(25 * HOUR)),
            t(ActivityKind::Leisure, 2.0, Some(9 * HOUR), Some(25 * HOUR)),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.typical_duration.is_finite() && self.typical_duration > 0.0) {
            return Err(Error::OutOfRange {
                what: "typical duration",
                value: self.typical_duration,
            });
        }
        if let (Some(o), Some(c)) = (self.opening, self.closing) {
            if o >= c {
                return Err(Error::Config(format!(
                    "{:?}: opening {o} not before closing {c}",
                    self.kind
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Activity {
    pub kind: ActivityKind,
    pub link: LinkId,
    /// Planned end, seconds since midnight. The last activity has none.
    pub end_time: Option<u32>,
}

/// A trip between two consecutive activities. It departs when the
/// preceding activity ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub mode: Mode,
    /// Links traversed after leaving the origin link, ending with the
    /// destination link. Only private vehicle trips carry a route.
    pub route: Vec<LinkId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub activities: Vec<Activity>,
    pub trips: Vec<Trip>,
    pub score: Option<f64>,
}

impl Plan {
    /// Planned departure of trip `i`.
    pub fn departure_time(&self, i: usize) -> u32 {
        self.activities[i].end_time.unwrap_or(0)
    }

    pub fn origin(&self, i: usize) -> LinkId {
        self.activities[i].link
    }

    pub fn destination(&self, i: usize) -> LinkId {
        self.activities[i + 1].link
    }

    /// Mode shared by all trips; plans are generated and mutated as
    /// single-mode day tours.
    pub fn main_mode(&self) -> Option<Mode> {
        self.trips.first().map(|t| t.mode)
    }

    /// Checks alternation, home wrapping and time ordering.
    pub fn validate_structure(&self) -> Result<()> {
        let bad = |reason: &str| Error::Malformed {
            what: "plan",
            reason: reason.to_string(),
        };
        if self.activities.len() < 2 {
            return Err(bad("needs at least two activities"));
        }
        if self.trips.len() + 1 != self.activities.len() {
            return Err(bad("activities and trips do not alternate"));
        }
        let first = &self.activities[0];
        let last = self.activities.last().expect("nonempty");
        if first.kind != ActivityKind::Home || last.kind != ActivityKind::Home {
            return Err(bad("chain must start and end at home"));
        }
        if first.link != last.link {
            return Err(bad("first and last home differ in location"));
        }
        if last.end_time.is_some() {
            return Err(bad("last activity has an end time"));
        }
        let mut prev = 0;
        for a in &self.activities[..self.activities.len() - 1] {
            let end = a.end_time.ok_or_else(|| bad("activity without end time"))?;
            if end < prev {
                return Err(bad("activity end times decrease"));
            }
            prev = end;
        }
        for t in &self.trips {
            if !t.mode.is_private_vehicle() && !t.route.is_empty() {
                return Err(bad("only private vehicle trips carry a route"));
            }
        }
        Ok(())
    }

    /// True when every private vehicle trip has a connected route.
    pub fn is_routed(&self, network: &Network) -> bool {
        self.trips.iter().enumerate().all(|(i, t)| {
            !t.mode.is_private_vehicle()
                || route_connects(network, self.origin(i), self.destination(i), &t.route)
        })
    }
}

/// Whether `route` leads from the end of `origin` through to the end of
/// `destination`.
pub fn route_connects(network: &Network, origin: LinkId, destination: LinkId, route: &[LinkId]) -> bool {
    if route.is_empty() {
        return origin == destination;
    }
    if route.last() != Some(&destination) {
        return false;
    }
    let mut at = network.link(origin).to;
    for &l in route {
        if l.index() >= network.n_links() || network.link(l).from != at {
            return false;
        }
        at = network.link(l).to;
    }
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: AgentId,
    pub name: String,
    pub modes: ModeSet,
    pub plans: Vec<Plan>,
    pub selected: usize,
}

impl Agent {
    pub fn new(id: AgentId, name: impl Into<String>, modes: ModeSet, plan: Plan) -> Self {
        Agent {
            id,
            name: name.into(),
            modes,
            plans: vec![plan],
            selected: 0,
        }
    }

    pub fn selected_plan(&self) -> &Plan {
        &self.plans[self.selected]
    }

    pub fn selected_plan_mut(&mut self) -> &mut Plan {
        &mut self.plans[self.selected]
    }

    pub fn best_score(&self) -> Option<f64> {
        self.plans
            .iter()
            .filter_map(|p| p.score)
            .fold(None, |acc, s| Some(acc.map_or(s, |a: f64| a.max(s))))
    }
}
