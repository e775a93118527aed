//! Toll schedules and the charges they levy.
//!
//! Facility and marginal-cost tolls are charged when a vehicle enters a
//! link. Distance and travel-time tolls are charged once per trip, at its
//! end. All published amounts are whole cents.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::demand::HOUR;
use crate::error::{Error, Result};
use crate::network::{LinkId, Network, SECONDS_PER_HOUR};

/// Half-open interval of seconds since midnight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: u32,
    pub end: u32,
}

impl TimeWindow {
    pub const fn hours(start: u32, end: u32) -> Self {
        TimeWindow {
            start: start * HOUR,
            end: end * HOUR,
        }
    }

    pub fn contains(&self, t: u32) -> bool {
        self.start <= t && t < self.end
    }
}

/// Morning and evening peaks.
pub const PEAK_WINDOWS: [TimeWindow; 2] = [TimeWindow::hours(7, 9), TimeWindow::hours(17, 19)];
/// Default window of the distance scheme.
pub const DISTANCE_WINDOW: TimeWindow = TimeWindow::hours(7, 20);
pub const MCP_INTERVAL: u32 = 900;
pub const TRAVEL_TIME_INTERVAL: u32 = 1800;
/// Upper bound on a published marginal-cost toll, cents.
pub const MCP_CAP_CENTS: i64 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    None,
    Facility,
    Distance,
    Mcp,
    TravelTime,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::None,
        SchemeKind::Facility,
        SchemeKind::Distance,
        SchemeKind::Mcp,
        SchemeKind::TravelTime,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(SchemeKind::None),
            "facility" | "link" => Ok(SchemeKind::Facility),
            "distance" => Ok(SchemeKind::Distance),
            "mcp" => Ok(SchemeKind::Mcp),
            "travel-time" | "travel_time" | "traveltime" => Ok(SchemeKind::TravelTime),
            other => Err(Error::Config(format!("unknown toll scheme `{other}`"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::None => "none",
            SchemeKind::Facility => "facility",
            SchemeKind::Distance => "distance",
            SchemeKind::Mcp => "mcp",
            SchemeKind::TravelTime => "travel-time",
        }
    }

    /// Schemes set by a single fare level rather than by simulation feedback.
    pub fn is_traditional(self) -> bool {
        matches!(self, SchemeKind::Facility | SchemeKind::Distance)
    }

    pub fn is_advanced(self) -> bool {
        matches!(self, SchemeKind::Mcp | SchemeKind::TravelTime)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FacilityToll {
    pub links: BTreeSet<LinkId>,
    /// Flat charge per tolled link entered inside a window.
    pub cents: i64,
    pub windows: Vec<TimeWindow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceToll {
    pub cents_per_mile: i64,
    pub window: TimeWindow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McpToll {
    /// Publication interval, seconds.
    pub interval: u32,
    pub cap_cents: i64,
    /// Per link, one charge per publication interval from midnight.
    #[serde(with = "link_rows")]
    pub tolls: BTreeMap<LinkId, Vec<i64>>,
}

/// Serializes a link-keyed map as `[link, values]` rows, since JSON object
/// keys cannot carry numeric link ids.
mod link_rows {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serializer};

    use crate::network::LinkId;

    pub fn serialize<S: Serializer>(map: &BTreeMap<LinkId, Vec<i64>>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<LinkId, Vec<i64>>, D::Error> {
        let rows: Vec<(LinkId, Vec<i64>)> = Vec::deserialize(d)?;
        Ok(rows.into_iter().collect())
    }
}

impl McpToll {
    pub fn cents(&self, link: LinkId, t: u32) -> i64 {
        self.tolls
            .get(&link)
            .and_then(|v| v.get((t / self.interval) as usize))
            .copied()
            .unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TravelTimeToll {
    /// Publication interval, seconds.
    pub interval: u32,
    pub alpha: f64,
    /// Congestion component per interval, dollars per vehicle-hour.
    pub sigma: Vec<f64>,
    /// Published charge `alpha * sigma` per interval, cents per vehicle-hour.
    pub cents_per_hour: Vec<i64>,
}

impl TravelTimeToll {
    pub fn new(interval: u32, alpha: f64, sigma: Vec<f64>) -> Self {
        let cents_per_hour = sigma.iter().map(|s| (alpha * s * 100.0).round() as i64).collect();
        TravelTimeToll {
            interval,
            alpha,
            sigma,
            cents_per_hour,
        }
    }

    fn rate(&self, k: usize) -> i64 {
        self.cents_per_hour.get(k).copied().unwrap_or(0)
    }

    /// Charge in (fractional) cents for travelling during `[from, to)`.
    fn exact_cents(&self, from: u32, to: u32) -> f64 {
        let mut total = 0.0;
        let mut t = from;
        while t < to {
            let k = t / self.interval;
            let next = ((k + 1) * self.interval).min(to);
            total += self.rate(k as usize) as f64 * f64::from(next - t) / SECONDS_PER_HOUR;
            t = next;
        }
        total
    }
}

/// One link entry of a vehicle, as seen by trip-end charging.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkEntry {
    pub link: LinkId,
    pub time: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum TollSchedule {
    #[default]
    None,
    Facility(FacilityToll),
    Distance(DistanceToll),
    Mcp(McpToll),
    TravelTime(TravelTimeToll),
}

impl TollSchedule {
    pub fn kind(&self) -> SchemeKind {
        match self {
            TollSchedule::None => SchemeKind::None,
            TollSchedule::Facility(_) => SchemeKind::Facility,
            TollSchedule::Distance(_) => SchemeKind::Distance,
            TollSchedule::Mcp(_) => SchemeKind::Mcp,
            TollSchedule::TravelTime(_) => SchemeKind::TravelTime,
        }
    }

    pub fn charges_at_entry(&self) -> bool {
        matches!(self, TollSchedule::Facility(_) | TollSchedule::Mcp(_))
    }

    pub fn charges_at_trip_end(&self) -> bool {
        matches!(self, TollSchedule::Distance(_) | TollSchedule::TravelTime(_))
    }

    /// Charge for entering `link` at `t`.
    pub fn link_entry_cents(&self, link: LinkId, t: u32) -> i64 {
        match self {
            TollSchedule::Facility(f) => {
                if f.links.contains(&link) && f.windows.iter().any(|w| w.contains(t)) {
                    f.cents
                } else {
                    0
                }
            }
            TollSchedule::Mcp(m) => m.cents(link, t),
            _ => 0,
        }
    }

    /// Charge due at the end of a trip whose vehicle entered `entries` and
    /// was on the move during `spans`.
    pub fn trip_end_cents(&self, network: &Network, entries: &[LinkEntry], spans: &[(u32, u32)]) -> i64 {
        match self {
            TollSchedule::Distance(d) => {
                let miles: f64 = entries
                    .iter()
                    .filter(|e| d.window.contains(e.time))
                    .map(|e| network.link(e.link).length_miles())
                    .sum();
                (d.cents_per_mile as f64 * miles).round() as i64
            }
            TollSchedule::TravelTime(_) => self.trip_end_cents_spans(spans),
            _ => 0,
        }
    }

    /// Expected charge in dollars for traversing `link` entered at `t` and
    /// taking `travel_time` seconds. Used by the router.
    pub fn expected_link_dollars(&self, network: &Network, link: LinkId, t: u32, travel_time: f64) -> f64 {
        let cents = match self {
            TollSchedule::None => 0.0,
            TollSchedule::Facility(_) | TollSchedule::Mcp(_) => self.link_entry_cents(link, t) as f64,
            TollSchedule::Distance(d) => {
                if d.window.contains(t) {
                    d.cents_per_mile as f64 * network.link(link).length_miles()
                } else {
                    0.0
                }
            }
            TollSchedule::TravelTime(tt) => {
                tt.rate((t / tt.interval) as usize) as f64 * travel_time / SECONDS_PER_HOUR
            }
        };
        cents / 100.0
    }

    pub fn validate(&self) -> Result<()> {
        let negative = |what: &'static str, v: i64| {
            if v < 0 {
                Err(Error::OutOfRange { what, value: v as f64 })
            } else {
                Ok(())
            }
        };
        match self {
            TollSchedule::None => Ok(()),
            TollSchedule::Facility(f) => negative("facility toll", f.cents),
            TollSchedule::Distance(d) => negative("distance rate", d.cents_per_mile),
            TollSchedule::Mcp(m) => {
                if m.interval == 0 || m.interval % 300 != 0 {
                    return Err(Error::Config("MCP interval must be a positive multiple of 300 s".into()));
                }
                for &c in m.tolls.values().flatten() {
                    negative("MCP toll", c)?;
                    if c > m.cap_cents {
                        return Err(Error::OutOfRange {
                            what: "MCP toll above cap",
                            value: c as f64,
                        });
                    }
                }
                Ok(())
            }
            TollSchedule::TravelTime(t) => {
                if t.interval == 0 || t.interval % 300 != 0 {
                    return Err(Error::Config(
                        "travel-time interval must be a positive multiple of 300 s".into(),
                    ));
                }
                if !(t.alpha.is_finite() && t.alpha > 0.0) {
                    return Err(Error::OutOfRange {
                        what: "alpha",
                        value: t.alpha,
                    });
                }
                for &c in &t.cents_per_hour {
                    negative("travel-time rate", c)?;
                }
                Ok(())
            }
        }
    }
}

pub fn facility_schedule(links: BTreeSet<LinkId>, dollars: f64) -> TollSchedule {
    TollSchedule::Facility(FacilityToll {
        links,
        cents: (dollars * 100.0).round() as i64,
        windows: PEAK_WINDOWS.to_vec(),
    })
}

pub fn distance_schedule(dollars_per_mile: f64) -> TollSchedule {
    TollSchedule::Distance(DistanceToll {
        cents_per_mile: (dollars_per_mile * 100.0).round() as i64,
        window: DISTANCE_WINDOW,
    })
}

/// Facility charge in dollars for entering `link` at `t`.
pub fn facility_toll(link: LinkId, t: u32, schedule: &TollSchedule) -> f64 {
    match schedule {
        TollSchedule::Facility(_) => schedule.link_entry_cents(link, t) as f64 / 100.0,
        _ => 0.0,
    }
}

/// Distance charge in dollars for a trip, prorated by link-entry times.
pub fn distance_toll(network: &Network, entries: &[LinkEntry], schedule: &TollSchedule) -> f64 {
    match schedule {
        TollSchedule::Distance(_) => schedule.trip_end_cents(network, entries, &[]) as f64 / 100.0,
        _ => 0.0,
    }
}

/// Travel-time charge in dollars for travelling during `[from, to)`.
pub fn traveltime_toll(from: u32, to: u32, schedule: &TollSchedule) -> f64 {
    match schedule {
        TollSchedule::TravelTime(_) => schedule.trip_end_cents_spans(&[(from, to)]) as f64 / 100.0,
        _ => 0.0,
    }
}

impl TollSchedule {
    fn trip_end_cents_spans(&self, spans: &[(u32, u32)]) -> i64 {
        match self {
            TollSchedule::TravelTime(tt) => spans
                .iter()
                .map(|&(a, b)| tt.exact_cents(a, b))
                .sum::<f64>()
                .round() as i64,
            _ => 0,
        }
    }
}
