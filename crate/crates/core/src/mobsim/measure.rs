//! Measurements derived from an event log.

use std::collections::HashMap;

use super::events::{EventKind, EventLog, VehicleId};
use crate::demand::{AgentId, Mode};
use crate::network::{FlowObservation, LinkId, Network, METERS_PER_KM, SECONDS_PER_HOUR};
use crate::routing::TravelTimes;

/// Default measurement interval, seconds.
pub const MEASUREMENT_INTERVAL: u32 = 300;

/// Per-link observations on consecutive intervals from midnight.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSeries {
    pub interval: u32,
    pub n_intervals: usize,
    /// `link * n_intervals + k`.
    obs: Vec<FlowObservation>,
}

impl FlowSeries {
    pub fn get(&self, link: LinkId, k: usize) -> &FlowObservation {
        &self.obs[link.index() * self.n_intervals + k]
    }

    pub fn link(&self, link: LinkId) -> &[FlowObservation] {
        let start = link.index() * self.n_intervals;
        &self.obs[start..start + self.n_intervals]
    }

    pub fn n_links(&self) -> usize {
        self.obs.len() / self.n_intervals.max(1)
    }

    pub fn all(&self) -> &[FlowObservation] {
        &self.obs
    }
}

/// Aggregates link events into observations of length `interval` seconds
/// covering the whole day.
///
/// Flow and density follow Edie's definitions over each interval: density
/// is the time spent on the link per km and interval, flow the distance
/// covered per km and interval, so their ratio is the space-mean speed.
/// Each vehicle is taken to cross the link at its own average speed.
/// Vehicles still on a link at the end of the day are counted until then.
/// Users counts entries and the automated share is taken over entries.
pub fn measure_flows(log: &EventLog, network: &Network, interval: u32) -> FlowSeries {
    assert!(interval > 0, "measurement interval must be positive");
    let n_intervals = log.horizon.div_ceil(interval).max(1) as usize;
    let n_links = network.n_links();
    let mut entries = vec![0u32; n_links * n_intervals];
    let mut automated = vec![0u32; n_links * n_intervals];
    let mut occupancy_time = vec![0.0f64; n_links * n_intervals];
    let mut distance = vec![0.0f64; n_links * n_intervals];
    let end = n_intervals as u32 * interval;

    // spreads `weight` per second of [from, to) over the intervals
    let spread = |l: usize, from: u32, to: u32, weight: f64, acc: &mut Vec<f64>| {
        let mut t = from;
        while t < to {
            let k = (t / interval) as usize;
            let next = ((k as u32 + 1) * interval).min(to);
            acc[l * n_intervals + k.min(n_intervals - 1)] += weight * f64::from(next - t);
            t = next;
        }
    };
    let mut traversal = |link: LinkId, enter: u32, leave: u32| {
        let l = link.index();
        let (enter, leave) = (enter.min(end), leave.min(end));
        spread(l, enter, leave, 1.0, &mut occupancy_time);
        let link = network.link(link);
        let duration = (leave - enter).max(link.free_flow_time()).max(1);
        spread(l, enter, leave, link.length / f64::from(duration), &mut distance);
    };

    let mut open: HashMap<VehicleId, (LinkId, u32)> = HashMap::new();
    for e in &log.events {
        match e.kind {
            EventKind::LinkEnter { vehicle, link, automated: av } => {
                open.insert(vehicle, (link, e.time));
                let s = link.index() * n_intervals + ((e.time / interval) as usize).min(n_intervals - 1);
                entries[s] += 1;
                if av {
                    automated[s] += 1;
                }
            }
            EventKind::LinkLeave { vehicle, .. } => {
                if let Some((link, t)) = open.remove(&vehicle) {
                    traversal(link, t, e.time);
                }
            }
            _ => {}
        }
    }
    let mut unfinished: Vec<_> = open.into_values().collect();
    unfinished.sort_by_key(|&(l, t)| (l, t));
    for (link, t) in unfinished {
        traversal(link, t, end);
    }

    let hours = f64::from(interval) / SECONDS_PER_HOUR;
    let mut obs = Vec::with_capacity(n_links * n_intervals);
    for (l, link) in network.links().iter().enumerate() {
        let km = link.length / METERS_PER_KM;
        for k in 0..n_intervals {
            let i = l * n_intervals + k;
            let start = k as u32 * interval;
            obs.push(FlowObservation {
                link: LinkId(l as u32),
                start,
                end: start + interval,
                density: occupancy_time[i] / f64::from(interval) / km,
                outflow: distance[i] / link.length / hours,
                users: entries[i],
                av_share: if entries[i] == 0 {
                    0.0
                } else {
                    f64::from(automated[i]) / f64::from(entries[i])
                },
            });
        }
    }
    FlowSeries {
        interval,
        n_intervals,
        obs,
    }
}

/// Completed link traversals `(link, enter, leave)` in leave order.
pub fn traversals(log: &EventLog) -> Vec<(LinkId, u32, u32)> {
    let mut open: HashMap<VehicleId, (LinkId, u32)> = HashMap::new();
    let mut out = Vec::new();
    for e in &log.events {
        match e.kind {
            EventKind::LinkEnter { vehicle, link, .. } => {
                open.insert(vehicle, (link, e.time));
            }
            EventKind::LinkLeave { vehicle, link } => {
                if let Some((l, t)) = open.remove(&vehicle) {
                    debug_assert_eq!(l, link);
                    out.push((link, t, e.time));
                }
            }
            _ => {}
        }
    }
    out
}

/// Mean observed link travel times, for routing in the next iteration.
pub fn travel_times(log: &EventLog, network: &Network) -> TravelTimes {
    TravelTimes::from_traversals(network, log.horizon, traversals(log))
}

/// Vehicle counts of one link over the whole day.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LinkBalance {
    pub entries: u32,
    pub exits: u32,
    /// Vehicles reported stuck on the link at the end of the day.
    pub residue: u32,
    /// Largest number of vehicles on the link at any time.
    pub peak_occupancy: u32,
}

pub fn link_balances(log: &EventLog, network: &Network) -> Vec<LinkBalance> {
    let mut b = vec![LinkBalance::default(); network.n_links()];
    let mut occ = vec![0i64; network.n_links()];
    for e in &log.events {
        match e.kind {
            EventKind::LinkEnter { link, .. } => {
                let x = &mut b[link.index()];
                x.entries += 1;
                occ[link.index()] += 1;
                x.peak_occupancy = x.peak_occupancy.max(occ[link.index()] as u32);
            }
            EventKind::LinkLeave { link, .. } => {
                b[link.index()].exits += 1;
                occ[link.index()] -= 1;
            }
            EventKind::Stuck { link: Some(link), .. } => b[link.index()].residue += 1,
            _ => {}
        }
    }
    b
}

/// One trip as executed.
#[derive(Clone, Debug, PartialEq)]
pub struct ExecutedTrip {
    pub mode: Mode,
    pub depart: u32,
    /// None when the trip did not finish.
    pub arrive: Option<u32>,
    /// Network distance driven by the agent's own vehicle, meters.
    pub private_distance: f64,
    /// Network distance travelled aboard any vehicle, meters.
    pub in_vehicle_distance: f64,
    pub toll_cents: i64,
    pub fare_cents: i64,
}

impl ExecutedTrip {
    pub fn travel_time(&self) -> Option<u32> {
        self.arrive.map(|a| a - self.depart)
    }
}

/// Executed activity times of one agent. `ends[i]` is the end of activity
/// `i` and `starts[j]` the start of activity `j + 1`; activities that were
/// never reached or never left have no entry.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExecutedDay {
    pub starts: Vec<u32>,
    pub ends: Vec<u32>,
    pub trips: Vec<ExecutedTrip>,
    pub stuck: bool,
}

/// Splits an event log into per-agent executed days.
pub fn executed_days(log: &EventLog, network: &Network, n_agents: usize) -> Vec<ExecutedDay> {
    let mut days = vec![ExecutedDay::default(); n_agents];
    let mut riders: HashMap<u32, AgentId> = HashMap::new();
    for e in &log.events {
        match &e.kind {
            EventKind::ActEnd { agent, .. } => days[agent.index()].ends.push(e.time),
            EventKind::ActStart { agent, .. } => days[agent.index()].starts.push(e.time),
            EventKind::Depart { agent, mode, .. } => days[agent.index()].trips.push(ExecutedTrip {
                mode: *mode,
                depart: e.time,
                arrive: None,
                private_distance: 0.0,
                in_vehicle_distance: 0.0,
                toll_cents: 0,
                fare_cents: 0,
            }),
            EventKind::Arrive { agent, .. } => {
                if let Some(t) = days[agent.index()].trips.last_mut() {
                    t.arrive = Some(e.time);
                }
            }
            EventKind::LinkEnter {
                vehicle: VehicleId::Private(agent),
                link,
                ..
            } => {
                if let Some(t) = days[agent.index()].trips.last_mut() {
                    t.private_distance += network.link(*link).length;
                    t.in_vehicle_distance += network.link(*link).length;
                }
            }
            EventKind::LinkEnter {
                vehicle: VehicleId::Sav(v),
                link,
                ..
            } => {
                if let Some(rider) = riders.get(v) {
                    if let Some(t) = days[rider.index()].trips.last_mut() {
                        t.in_vehicle_distance += network.link(*link).length;
                    }
                }
            }
            EventKind::SavPickup { vehicle, agent, .. } => {
                riders.insert(*vehicle, *agent);
            }
            EventKind::TollCharged { agent, cents, .. } => {
                if let Some(t) = days[agent.index()].trips.last_mut() {
                    t.toll_cents += cents;
                }
            }
            EventKind::SavDropoff {
                vehicle,
                agent,
                fare_cents,
                ..
            } => {
                riders.remove(vehicle);
                if let Some(t) = days[agent.index()].trips.last_mut() {
                    t.fare_cents += fare_cents;
                }
            }
            EventKind::Stuck { agent, .. } => days[agent.index()].stuck = true,
            _ => {}
        }
    }
    days
}

/// Mode and travel time of every trip, per agent. Unfinished trips have
/// no travel time.
pub fn trip_travel_times(days: &[ExecutedDay]) -> Vec<Vec<(Mode, Option<u32>)>> {
    days.iter()
        .map(|d| d.trips.iter().map(|t| (t.mode, t.travel_time())).collect())
        .collect()
}
