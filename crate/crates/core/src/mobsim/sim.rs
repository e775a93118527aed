//! Queue-based loading of one simulated day.
//!
//! Each link holds a FIFO of vehicles with their earliest exit time (entry
//! plus free-flow time) and a buffer of vehicles departing from its
//! downstream end. Once per second every busy link releases vehicles while it
//! has outflow credit and the next link has storage left. Credit accrues at
//! the link's flow capacity; an automated vehicle consumes only a fraction
//! of a conventional vehicle's credit, which yields the blended capacity
//! `C / (1 - s + s c)` for a stream with automated share `s`. Vehicles at
//! the end of their route leave without consuming credit. Activity ends and
//! teleported arrivals run on a timed queue.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use super::events::{Event, EventKind, EventLog, VehicleId};
use crate::demand::{route_connects, Agent, AgentId, Mode, HOUR};
use crate::dispatch::{fare_cents, Assignment, Dispatcher, Request, RequestId, Tariff, TravelTimeEstimate};
use crate::error::{Error, Result};
use crate::network::{LinkId, Network, METERS_PER_MILE};
use crate::pricing::{LinkEntry, TollSchedule};
use crate::routing::{route, CostParams, TravelTimes};

/// Default end of the simulated day.
pub const DAY_HORIZON: u32 = 30 * HOUR;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MobsimConfig {
    /// Share of a conventional vehicle's flow capacity used by an automated
    /// vehicle.
    pub capacity_factor: f64,
    pub pt_speed_kmh: f64,
    pub walk_bike_speed_kmh: f64,
    /// Ratio of teleported travel distance to straight-line distance.
    pub beeline_factor: f64,
    /// Trips still running at this time are reported stuck.
    pub horizon: u32,
}

impl Default for MobsimConfig {
    fn default() -> Self {
        MobsimConfig {
            capacity_factor: 0.666,
            pt_speed_kmh: 20.0,
            walk_bike_speed_kmh: 5.0,
            beeline_factor: 1.3,
            horizon: DAY_HORIZON,
        }
    }
}

impl MobsimConfig {
    /// Distance covered by a teleported trip, meters.
    pub fn teleport_distance(&self, network: &Network, from: LinkId, to: LinkId) -> f64 {
        network.beeline(from, to) * self.beeline_factor
    }

    /// Duration of a teleported trip, seconds.
    pub fn teleport_time(&self, network: &Network, mode: Mode, from: LinkId, to: LinkId) -> u32 {
        let kmh = match mode {
            Mode::Pt => self.pt_speed_kmh,
            _ => self.walk_bike_speed_kmh,
        };
        let seconds = self.teleport_distance(network, from, to) / (kmh / 3.6);
        (seconds - 1e-9).ceil().max(0.0) as u32
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.capacity_factor > 0.0 && self.capacity_factor <= 1.0) {
            return Err(Error::OutOfRange {
                what: "capacity factor",
                value: self.capacity_factor,
            });
        }
        for (what, v) in [
            ("pt speed", self.pt_speed_kmh),
            ("walk/bike speed", self.walk_bike_speed_kmh),
            ("beeline factor", self.beeline_factor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::OutOfRange { what, value: v });
            }
        }
        Ok(())
    }
}

/// Fleet of shared vehicles for one day.
pub struct Fleet<'a> {
    /// Initial parking link of each vehicle.
    pub placements: &'a [LinkId],
    pub tariff: Tariff,
    /// Travel-time estimate used to find the nearest vehicle or request.
    pub estimate: &'a dyn TravelTimeEstimate,
}

pub struct DayInput<'a> {
    pub network: &'a Network,
    /// Each agent's selected plan is executed.
    pub agents: &'a [Agent],
    pub tolls: &'a TollSchedule,
    pub fleet: Option<Fleet<'a>>,
    /// Link travel times used to route fleet vehicles.
    pub travel_times: &'a TravelTimes,
    pub config: &'a MobsimConfig,
}

enum Leg {
    Private {
        agent: AgentId,
    },
    Approach {
        vehicle: u32,
        request: Request,
    },
    Occupied {
        vehicle: u32,
        request: Request,
        pickup: u32,
        distance: f64,
    },
}

impl Leg {
    fn payer(&self) -> AgentId {
        match self {
            Leg::Private { agent } => *agent,
            Leg::Approach { request, .. } | Leg::Occupied { request, .. } => request.agent,
        }
    }
}

struct Moving {
    id: VehicleId,
    automated: bool,
    route: Vec<LinkId>,
    /// Index into `route` of the next link to enter.
    pos: usize,
    link: LinkId,
    /// False while waiting to depart from the end of `link`.
    on_link: bool,
    leg: Leg,
}

struct LinkState {
    queue: VecDeque<(usize, u32)>,
    waiting: VecDeque<usize>,
    occupancy: u32,
    credit: f64,
    last_update: u32,
    rate: f64,
    max_credit: f64,
    storage: u32,
    free_flow_time: u32,
}

impl LinkState {
    fn refill(&mut self, t: u32) {
        if t > self.last_update {
            self.credit = (self.credit + self.rate * f64::from(t - self.last_update)).min(self.max_credit);
            self.last_update = t;
        }
    }

    fn is_idle(&self) -> bool {
        self.queue.is_empty() && self.waiting.is_empty()
    }
}

#[derive(Default)]
struct TripCharges {
    entries: Vec<LinkEntry>,
    spans: Vec<(u32, u32)>,
    span_start: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Timed {
    ActEnd,
    TeleportArrive,
}

struct Sim<'a> {
    input: &'a DayInput<'a>,
    events: Vec<Event>,
    timed: BinaryHeap<Reverse<(u32, u64, u32, Timed)>>,
    seq: u64,
    links: Vec<LinkState>,
    active: BTreeSet<usize>,
    vehicles: Vec<Option<Moving>>,
    free_slots: Vec<usize>,
    /// Index of each agent's current (or last left) activity.
    activity: Vec<usize>,
    traveling: Vec<bool>,
    /// Vehicle currently serving each traveling agent.
    serving: Vec<Option<usize>>,
    charges: Vec<TripCharges>,
    dispatcher: Option<Dispatcher>,
    next_request: u32,
}

/// Runs the selected plans of all agents through the network for one day.
///
/// The result depends only on the inputs; there is no randomness inside a
/// simulated day.
pub fn simulate_day(input: &DayInput) -> Result<EventLog> {
    input.config.validate()?;
    validate_plans(input)?;
    let network = input.network;
    let links = network
        .links()
        .iter()
        .map(|l| {
            let rate = l.flow_capacity / 3600.0;
            let max_credit = rate.max(1.0);
            LinkState {
                queue: VecDeque::new(),
                waiting: VecDeque::new(),
                occupancy: 0,
                credit: max_credit,
                last_update: 0,
                rate,
                max_credit,
                storage: l.storage_capacity,
                free_flow_time: l.free_flow_time(),
            }
        })
        .collect();
    let n = input.agents.len();
    let mut sim = Sim {
        input,
        events: Vec::new(),
        timed: BinaryHeap::new(),
        seq: 0,
        links,
        active: BTreeSet::new(),
        vehicles: Vec::new(),
        free_slots: Vec::new(),
        activity: vec![0; n],
        traveling: vec![false; n],
        serving: vec![None; n],
        charges: (0..n).map(|_| TripCharges::default()).collect(),
        dispatcher: input.fleet.as_ref().map(|f| Dispatcher::new(f.placements)),
        next_request: 0,
    };
    for (i, agent) in input.agents.iter().enumerate() {
        if let Some(end) = agent.selected_plan().activities[0].end_time {
            sim.schedule(end, i as u32, Timed::ActEnd);
        }
    }
    sim.run()?;
    Ok(EventLog {
        horizon: input.config.horizon,
        events: sim.events,
    })
}

fn validate_plans(input: &DayInput) -> Result<()> {
    for agent in input.agents {
        let plan = agent.selected_plan();
        plan.validate_structure()?;
        for (i, trip) in plan.trips.iter().enumerate() {
            let (o, d) = (plan.origin(i), plan.destination(i));
            for l in [o, d].iter().chain(&trip.route) {
                if l.index() >= input.network.n_links() {
                    return Err(Error::UnknownLink(l.to_string()));
                }
            }
            if trip.mode.is_private_vehicle() && !route_connects(input.network, o, d, &trip.route) {
                return Err(Error::Malformed {
                    what: "plan",
                    reason: format!("agent {} trip {i} has no connected route", agent.name),
                });
            }
            if trip.mode == Mode::Sav && input.fleet.is_none() {
                return Err(Error::Config(format!(
                    "agent {} uses the shared fleet but none is configured",
                    agent.name
                )));
            }
        }
    }
    if let Some(f) = &input.fleet {
        f.tariff.validate()?;
        if let Some(l) = f.placements.iter().find(|l| l.index() >= input.network.n_links()) {
            return Err(Error::UnknownLink(l.to_string()));
        }
    }
    Ok(())
}

impl Sim<'_> {
    fn emit(&mut self, time: u32, kind: EventKind) {
        self.events.push(Event { time, kind });
    }

    fn schedule(&mut self, time: u32, agent: u32, what: Timed) {
        self.timed.push(Reverse((time, self.seq, agent, what)));
        self.seq += 1;
    }

    fn run(&mut self) -> Result<()> {
        let horizon = self.input.config.horizon;
        let Some(&Reverse((mut t, ..))) = self.timed.peek() else {
            return Ok(());
        };
        while t <= horizon {
            self.drain_timed(t)?;
            let busy: Vec<usize> = self.active.iter().copied().collect();
            for l in busy {
                self.process_link(l, t)?;
            }
            // activities that begin this second may also end this second
            self.drain_timed(t)?;
            self.active.retain(|&l| !self.links[l].is_idle());

            let mut next = self.timed.peek().map_or(u32::MAX, |r| r.0 .0);
            for &l in &self.active {
                let s = &self.links[l];
                let ready = s.queue.front().map_or(u32::MAX, |&(_, r)| r);
                next = if s.waiting.is_empty() { next.min(ready) } else { t + 1 };
                if next <= t + 1 {
                    break;
                }
            }
            if next == u32::MAX {
                break;
            }
            t = next.max(t + 1);
        }
        self.report_stuck(horizon);
        Ok(())
    }

    fn drain_timed(&mut self, t: u32) -> Result<()> {
        while let Some(&Reverse((time, _, agent, what))) = self.timed.peek() {
            if time > t {
                break;
            }
            self.timed.pop();
            let agent = AgentId(agent);
            match what {
                Timed::ActEnd => self.end_activity(agent, t)?,
                Timed::TeleportArrive => self.arrive(agent, t),
            }
        }
        Ok(())
    }

    fn process_link(&mut self, l: usize, t: u32) -> Result<()> {
        self.links[l].refill(t);
        loop {
            if let Some(&(h, ready)) = self.links[l].queue.front() {
                if ready <= t {
                    let at_end = {
                        let v = self.vehicles[h].as_ref().expect("queued vehicle");
                        v.pos == v.route.len()
                    };
                    if at_end {
                        self.links[l].queue.pop_front();
                        self.links[l].occupancy -= 1;
                        let v = self.vehicles[h].as_mut().expect("queued vehicle");
                        v.on_link = false;
                        let id = v.id;
                        self.emit(t, EventKind::LinkLeave {
                            vehicle: id,
                            link: LinkId(l as u32),
                        });
                        self.finish_leg(h, t)?;
                        continue;
                    }
                    if self.try_move(l, h, true, t) {
                        continue;
                    }
                    break;
                }
            }
            match self.links[l].waiting.front().copied() {
                Some(h) if self.try_move(l, h, false, t) => continue,
                _ => break,
            }
        }
        Ok(())
    }

    fn try_move(&mut self, l: usize, h: usize, from_queue: bool, t: u32) -> bool {
        let (next, automated, id) = {
            let v = self.vehicles[h].as_ref().expect("vehicle");
            (v.route[v.pos], v.automated, v.id)
        };
        let weight = if automated {
            self.input.config.capacity_factor
        } else {
            1.0
        };
        if self.links[l].credit + 1e-9 < weight {
            return false;
        }
        let target = &self.links[next.index()];
        if target.occupancy >= target.storage {
            return false;
        }
        let from = &mut self.links[l];
        from.credit = (from.credit - weight).max(0.0);
        if from_queue {
            from.queue.pop_front();
            from.occupancy -= 1;
            self.emit(t, EventKind::LinkLeave {
                vehicle: id,
                link: LinkId(l as u32),
            });
        } else {
            from.waiting.pop_front();
        }
        self.enter(h, next, t);
        true
    }

    fn enter(&mut self, h: usize, link: LinkId, t: u32) {
        let v = self.vehicles[h].as_mut().expect("vehicle");
        v.pos += 1;
        v.link = link;
        v.on_link = true;
        let (id, automated, payer) = (v.id, v.automated, v.leg.payer());
        let empty_drive = match v.leg {
            Leg::Approach { vehicle, request } => Some((vehicle, request.agent)),
            _ => None,
        };
        let s = &mut self.links[link.index()];
        s.occupancy += 1;
        s.queue.push_back((h, t + s.free_flow_time));
        self.active.insert(link.index());
        self.emit(t, EventKind::LinkEnter {
            vehicle: id,
            link,
            automated,
        });
        if let Some((vehicle, agent)) = empty_drive {
            self.emit(t, EventKind::SavEmptyDrive { vehicle, agent, link });
        }
        self.charges[payer.index()].entries.push(LinkEntry { link, time: t });
        let cents = self.input.tolls.link_entry_cents(link, t);
        if cents > 0 {
            self.emit(t, EventKind::TollCharged {
                agent: payer,
                link: Some(link),
                cents,
            });
        }
    }

    fn spawn(&mut self, v: Moving) -> usize {
        let link = v.link.index();
        let h = match self.free_slots.pop() {
            Some(h) => {
                self.vehicles[h] = Some(v);
                h
            }
            None => {
                self.vehicles.push(Some(v));
                self.vehicles.len() - 1
            }
        };
        self.links[link].waiting.push_back(h);
        self.active.insert(link);
        h
    }

    fn end_activity(&mut self, agent: AgentId, t: u32) -> Result<()> {
        let a = agent.index();
        let plan = self.input.agents[a].selected_plan();
        let i = self.activity[a];
        let act = &plan.activities[i];
        self.emit(t, EventKind::ActEnd {
            agent,
            act: act.kind,
            link: act.link,
        });
        let trip = &plan.trips[i];
        let (origin, destination) = (plan.origin(i), plan.destination(i));
        self.emit(t, EventKind::Depart {
            agent,
            mode: trip.mode,
            link: origin,
        });
        self.traveling[a] = true;
        self.charges[a] = TripCharges {
            span_start: t,
            ..TripCharges::default()
        };
        match trip.mode {
            Mode::Car | Mode::Av => {
                if trip.route.is_empty() {
                    self.close_private_trip(agent, t);
                } else {
                    let h = self.spawn(Moving {
                        id: VehicleId::Private(agent),
                        automated: trip.mode == Mode::Av,
                        route: trip.route.clone(),
                        pos: 0,
                        link: origin,
                        on_link: false,
                        leg: Leg::Private { agent },
                    });
                    self.serving[a] = Some(h);
                }
            }
            Mode::Pt | Mode::WalkBike => {
                let dt = self
                    .input
                    .config
                    .teleport_time(self.input.network, trip.mode, origin, destination);
                self.schedule(t + dt, agent.0, Timed::TeleportArrive);
            }
            Mode::Sav => {
                let request = Request {
                    id: RequestId(self.next_request),
                    agent,
                    origin,
                    destination,
                    submitted: t,
                };
                self.next_request += 1;
                self.emit(t, EventKind::SavRequest {
                    agent,
                    request: request.id,
                    origin,
                    destination,
                });
                let est = self.input.fleet.as_ref().expect("validated").estimate;
                let assignment = self.dispatcher.as_mut().expect("validated").on_request(request, est);
                if let Some(a) = assignment {
                    self.start_approach(a, t)?;
                }
            }
        }
        Ok(())
    }

    fn fleet_route(&self, from: LinkId, to: LinkId, t: u32) -> Result<Vec<LinkId>> {
        route(
            self.input.network,
            self.input.travel_times,
            &TollSchedule::None,
            &CostParams::time_only(),
            from,
            to,
            t,
        )
    }

    fn start_approach(&mut self, a: Assignment, t: u32) -> Result<()> {
        let from = self.dispatcher.as_ref().expect("fleet").vehicle(a.vehicle).link;
        let rider = a.request.agent.index();
        self.charges[rider].span_start = t;
        self.emit(t, EventKind::SavAssign {
            vehicle: a.vehicle,
            agent: a.request.agent,
            request: a.request.id,
        });
        let path = self.fleet_route(from, a.request.origin, t)?;
        if path.is_empty() {
            return self.pickup(a.vehicle, a.request, t);
        }
        let h = self.spawn(Moving {
            id: VehicleId::Sav(a.vehicle),
            automated: true,
            route: path,
            pos: 0,
            link: from,
            on_link: false,
            leg: Leg::Approach {
                vehicle: a.vehicle,
                request: a.request,
            },
        });
        self.serving[rider] = Some(h);
        Ok(())
    }

    fn pickup(&mut self, vehicle: u32, request: Request, t: u32) -> Result<()> {
        let rider = request.agent.index();
        let c = &mut self.charges[rider];
        c.spans.push((c.span_start, t));
        c.span_start = t;
        self.emit(t, EventKind::SavPickup {
            vehicle,
            agent: request.agent,
            link: request.origin,
        });
        self.dispatcher.as_mut().expect("fleet").pickup(vehicle, request.origin);
        let path = self.fleet_route(request.origin, request.destination, t)?;
        if path.is_empty() {
            return self.dropoff(vehicle, request, t, 0.0, t);
        }
        let distance = path.iter().map(|&l| self.input.network.link(l).length).sum();
        let h = self.spawn(Moving {
            id: VehicleId::Sav(vehicle),
            automated: true,
            route: path,
            pos: 0,
            link: request.origin,
            on_link: false,
            leg: Leg::Occupied {
                vehicle,
                request,
                pickup: t,
                distance,
            },
        });
        self.serving[rider] = Some(h);
        Ok(())
    }

    fn dropoff(&mut self, vehicle: u32, request: Request, pickup: u32, distance: f64, t: u32) -> Result<()> {
        let rider = request.agent.index();
        let c = &mut self.charges[rider];
        c.spans.push((c.span_start, t));
        let tariff = self.input.fleet.as_ref().expect("fleet").tariff;
        let fare = fare_cents(distance / METERS_PER_MILE, f64::from(t - pickup) / 60.0, &tariff);
        self.emit(t, EventKind::SavDropoff {
            vehicle,
            agent: request.agent,
            link: request.destination,
            fare_cents: fare,
        });
        self.charge_trip_end(request.agent, t);
        self.arrive(request.agent, t);
        let est = self.input.fleet.as_ref().expect("fleet").estimate;
        let next = self
            .dispatcher
            .as_mut()
            .expect("fleet")
            .on_vehicle_idle(vehicle, request.destination, est);
        if let Some(a) = next {
            self.start_approach(a, t)?;
        }
        Ok(())
    }

    fn finish_leg(&mut self, h: usize, t: u32) -> Result<()> {
        let v = self.vehicles[h].take().expect("vehicle");
        self.free_slots.push(h);
        match v.leg {
            Leg::Private { agent } => {
                self.close_private_trip(agent, t);
                Ok(())
            }
            Leg::Approach { vehicle, request } => self.pickup(vehicle, request, t),
            Leg::Occupied {
                vehicle,
                request,
                pickup,
                distance,
            } => self.dropoff(vehicle, request, pickup, distance, t),
        }
    }

    fn close_private_trip(&mut self, agent: AgentId, t: u32) {
        let c = &mut self.charges[agent.index()];
        c.spans.push((c.span_start, t));
        self.charge_trip_end(agent, t);
        self.arrive(agent, t);
    }

    fn charge_trip_end(&mut self, agent: AgentId, t: u32) {
        let c = std::mem::take(&mut self.charges[agent.index()]);
        let cents = self.input.tolls.trip_end_cents(self.input.network, &c.entries, &c.spans);
        if cents > 0 {
            self.emit(t, EventKind::TollCharged {
                agent,
                link: None,
                cents,
            });
        }
    }

    fn arrive(&mut self, agent: AgentId, t: u32) {
        let a = agent.index();
        let plan = self.input.agents[a].selected_plan();
        let trip = &plan.trips[self.activity[a]];
        let i = self.activity[a] + 1;
        let act = &plan.activities[i];
        self.emit(t, EventKind::Arrive {
            agent,
            mode: trip.mode,
            link: act.link,
        });
        self.emit(t, EventKind::ActStart {
            agent,
            act: act.kind,
            link: act.link,
        });
        self.activity[a] = i;
        self.traveling[a] = false;
        self.serving[a] = None;
        if let Some(end) = act.end_time {
            self.schedule(end.max(t), agent.0, Timed::ActEnd);
        }
    }

    fn report_stuck(&mut self, horizon: u32) {
        for a in 0..self.traveling.len() {
            if !self.traveling[a] {
                continue;
            }
            let (vehicle, link) = match self.serving[a].and_then(|h| self.vehicles[h].as_ref()) {
                Some(v) => (Some(v.id), v.on_link.then_some(v.link)),
                None => (None, None),
            };
            self.emit(horizon, EventKind::Stuck {
                agent: AgentId(a as u32),
                vehicle,
                link,
            });
        }
    }
}
