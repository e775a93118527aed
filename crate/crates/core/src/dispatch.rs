//! Shared autonomous vehicle fleet with demand-supply balancing dispatch.
//!
//! In oversupply (idle vehicles, no open requests) a new request gets the
//! nearest idle vehicle. In undersupply (no idle vehicles, open requests) a
//! vehicle that turns idle serves the nearest open request. "Nearest" is the
//! estimated travel time from the vehicle's link to the request's origin.

use serde::{Deserialize, Serialize};

use crate::demand::AgentId;
use crate::error::{Error, Result};
use crate::network::{LinkId, Network};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tariff {
    /// Dollars per trip.
    pub flat: f64,
    pub per_mile: f64,
    pub per_minute: f64,
}

impl Tariff {
    pub fn scaled(self, factor: f64) -> Tariff {
        Tariff {
            flat: self.flat * factor,
            per_mile: self.per_mile * factor,
            per_minute: self.per_minute * factor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, value) in [
            ("flat fare", self.flat),
            ("per-mile fare", self.per_mile),
            ("per-minute fare", self.per_minute),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::OutOfRange { what, value });
            }
        }
        Ok(())
    }
}

/// Fare in dollars for an occupied trip. Empty approach legs are not billed.
pub fn fare(distance_miles: f64, duration_minutes: f64, tariff: &Tariff) -> f64 {
    tariff.flat + tariff.per_mile * distance_miles.max(0.0) + tariff.per_minute * duration_minutes.max(0.0)
}

/// [`fare`] rounded to whole cents.
pub fn fare_cents(distance_miles: f64, duration_minutes: f64, tariff: &Tariff) -> i64 {
    (fare(distance_miles, duration_minutes, tariff) * 100.0).round() as i64
}

/// Estimated travel time in seconds between two links; infinite when
/// unreachable.
pub trait TravelTimeEstimate {
    fn estimate(&self, from: LinkId, to: LinkId) -> f64;
}

/// Straight-line estimate at a fixed speed.
pub struct Beeline<'a> {
    pub network: &'a Network,
    /// Meters per second.
    pub speed: f64,
}

impl TravelTimeEstimate for Beeline<'_> {
    fn estimate(&self, from: LinkId, to: LinkId) -> f64 {
        self.network.beeline(from, to) / self.speed
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequestId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleStatus {
    Idle,
    Approaching,
    Occupied,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FleetVehicle {
    pub id: u32,
    pub link: LinkId,
    pub status: VehicleStatus,
    pub assignment: Option<RequestId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub id: RequestId,
    pub agent: AgentId,
    pub origin: LinkId,
    pub destination: LinkId,
    /// Seconds since midnight.
    pub submitted: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Assignment {
    pub vehicle: u32,
    pub request: Request,
    /// Estimated approach time, seconds.
    pub approach: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupplyState {
    /// At least one idle vehicle and no open request.
    Oversupply,
    /// No idle vehicle and at least one open request.
    Undersupply,
    /// Neither idle vehicles nor open requests.
    BalancedEmpty,
    /// Idle vehicles and open requests coexist because none of the idle
    /// vehicles can reach any open request.
    Disconnected,
}

#[derive(Clone, Debug, Default)]
pub struct Dispatcher {
    vehicles: Vec<FleetVehicle>,
    /// Open requests in submission order.
    open: Vec<Request>,
}

impl Dispatcher {
    /// Fleet of idle vehicles parked at `placements`, ids in order.
    pub fn new(placements: &[LinkId]) -> Self {
        Dispatcher {
            vehicles: placements
                .iter()
                .enumerate()
                .map(|(i, &link)| FleetVehicle {
                    id: i as u32,
                    link,
                    status: VehicleStatus::Idle,
                    assignment: None,
                })
                .collect(),
            open: Vec::new(),
        }
    }

    pub fn vehicles(&self) -> &[FleetVehicle] {
        &self.vehicles
    }

    pub fn vehicle(&self, id: u32) -> &FleetVehicle {
        &self.vehicles[id as usize]
    }

    pub fn open_requests(&self) -> &[Request] {
        &self.open
    }

    pub fn classify(&self) -> SupplyState {
        let idle = self.vehicles.iter().any(|v| v.status == VehicleStatus::Idle);
        match (idle, self.open.is_empty()) {
            (true, true) => SupplyState::Oversupply,
            (false, false) => SupplyState::Undersupply,
            (false, true) => SupplyState::BalancedEmpty,
            (true, false) => SupplyState::Disconnected,
        }
    }

    /// Assigns the nearest reachable idle vehicle (lowest id on ties), or
    /// queues the request.
    pub fn on_request(&mut self, request: Request, est: &dyn TravelTimeEstimate) -> Option<Assignment> {
        let best = self
            .vehicles
            .iter()
            .filter(|v| v.status == VehicleStatus::Idle)
            .map(|v| (est.estimate(v.link, request.origin), v.id))
            .filter(|(t, _)| t.is_finite())
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        match best {
            Some((approach, vehicle)) => Some(self.assign(vehicle, request, approach)),
            None => {
                let pos = self
                    .open
                    .partition_point(|r| (r.submitted, r.id) <= (request.submitted, request.id));
                self.open.insert(pos, request);
                None
            }
        }
    }

    /// Marks `vehicle` idle at `link` and sends it to the nearest reachable
    /// open request (earlier submission, then lower id, on ties). Without
    /// one, the vehicle parks where it is.
    pub fn on_vehicle_idle(&mut self, vehicle: u32, link: LinkId, est: &dyn TravelTimeEstimate) -> Option<Assignment> {
        let v = &mut self.vehicles[vehicle as usize];
        v.link = link;
        v.status = VehicleStatus::Idle;
        v.assignment = None;
        let best = self
            .open
            .iter()
            .enumerate()
            .map(|(i, r)| (est.estimate(link, r.origin), i))
            .filter(|(t, _)| t.is_finite())
            // open is sorted by (submitted, id), so the index breaks ties
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))?;
        let request = self.open.remove(best.1);
        Some(self.assign(vehicle, request, best.0))
    }

    fn assign(&mut self, vehicle: u32, request: Request, approach: f64) -> Assignment {
        let v = &mut self.vehicles[vehicle as usize];
        debug_assert_eq!(v.status, VehicleStatus::Idle);
        v.status = VehicleStatus::Approaching;
        v.assignment = Some(request.id);
        Assignment {
            vehicle,
            request,
            approach,
        }
    }

    /// Passenger boards at `link`.
    pub fn pickup(&mut self, vehicle: u32, link: LinkId) {
        let v = &mut self.vehicles[vehicle as usize];
        debug_assert_eq!(v.status, VehicleStatus::Approaching);
        v.status = VehicleStatus::Occupied;
        v.link = link;
    }

    /// Updates the position of a moving vehicle.
    pub fn moved(&mut self, vehicle: u32, link: LinkId) {
        self.vehicles[vehicle as usize].link = link;
    }
}
