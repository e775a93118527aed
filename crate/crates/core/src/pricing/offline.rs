//! Recomputation of toll charges from an event log.

use std::collections::HashMap;

use super::schedule::{LinkEntry, TollSchedule};
use crate::demand::AgentId;
use crate::error::{Error, Result};
use crate::mobsim::{EventKind, EventLog, VehicleId};
use crate::network::Network;

#[derive(Default)]
struct OpenTrip {
    entries: Vec<LinkEntry>,
    spans: Vec<(u32, u32)>,
    span_start: u32,
}

/// Charges per agent, in cents, that `schedule` levies on the trips in
/// `log`. Uses only movement events, never the logged charges.
pub fn recompute_charges(log: &EventLog, network: &Network, schedule: &TollSchedule, n_agents: usize) -> Result<Vec<i64>> {
    let mut cents = vec![0i64; n_agents];
    let mut open: HashMap<AgentId, OpenTrip> = HashMap::new();
    let mut riders: HashMap<u32, AgentId> = HashMap::new();
    let agent_index = |a: AgentId| -> Result<usize> {
        if a.index() < n_agents {
            Ok(a.index())
        } else {
            Err(Error::PopulationMismatch(format!("event for unknown agent {}", a.0)))
        }
    };
    for e in &log.events {
        let t = e.time;
        match e.kind {
            EventKind::Depart { agent, .. } => {
                open.insert(
                    agent,
                    OpenTrip {
                        span_start: t,
                        ..OpenTrip::default()
                    },
                );
            }
            EventKind::SavAssign { vehicle, agent, .. } => {
                riders.insert(vehicle, agent);
                if let Some(trip) = open.get_mut(&agent) {
                    trip.span_start = t;
                }
            }
            EventKind::SavPickup { agent, .. } => {
                if let Some(trip) = open.get_mut(&agent) {
                    trip.spans.push((trip.span_start, t));
                    trip.span_start = t;
                }
            }
            EventKind::LinkEnter { vehicle, link, .. } => {
                let payer = match vehicle {
                    VehicleId::Private(a) => Some(a),
                    VehicleId::Sav(v) => riders.get(&v).copied(),
                };
                if let Some(payer) = payer {
                    cents[agent_index(payer)?] += schedule.link_entry_cents(link, t);
                    if let Some(trip) = open.get_mut(&payer) {
                        trip.entries.push(LinkEntry { link, time: t });
                    }
                }
            }
            EventKind::SavDropoff { vehicle, .. } => {
                if let Some(agent) = riders.remove(&vehicle) {
                    if let Some(trip) = open.get_mut(&agent) {
                        trip.spans.push((trip.span_start, t));
                        trip.span_start = t;
                    }
                }
            }
            EventKind::Arrive { agent, mode, .. } => {
                if let Some(mut trip) = open.remove(&agent) {
                    if !mode.is_network() {
                        continue;
                    }
                    if mode.is_private_vehicle() {
                        trip.spans.push((trip.span_start, t));
                    }
                    cents[agent_index(agent)?] += schedule.trip_end_cents(network, &trip.entries, &trip.spans);
                }
            }
            _ => {}
        }
    }
    Ok(cents)
}

/// Logged charges per agent, in cents.
pub fn logged_charges(log: &EventLog, n_agents: usize) -> Vec<i64> {
    let mut cents = vec![0i64; n_agents];
    for e in &log.events {
        if let EventKind::TollCharged { agent, cents: c, .. } = e.kind {
            if let Some(x) = cents.get_mut(agent.index()) {
                *x += c;
            }
        }
    }
    cents
}
