//! Fundamental-diagram measurements and the mixed AV/conventional capacity rule.

use serde::{Deserialize, Serialize};

use super::{Link, LinkId, METERS_PER_KM, SECONDS_PER_HOUR};
use crate::error::{Error, Result};

/// Aggregate traffic state of one link over one measurement interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowObservation {
    pub link: LinkId,
    /// Interval bounds, seconds since midnight.
    pub start: u32,
    pub end: u32,
    /// Time-mean density, vehicles per km.
    pub density: f64,
    /// Exits scaled to vehicles per hour.
    pub outflow: f64,
    /// Vehicles entering during the interval.
    pub users: u32,
    /// Fraction of entering vehicles that are automated.
    pub av_share: f64,
}

impl FlowObservation {
    /// Interval length in hours.
    pub fn duration_hours(&self) -> f64 {
        f64::from(self.end - self.start) / SECONDS_PER_HOUR
    }

    fn validate(&self) -> Result<()> {
        for (what, value) in [
            ("density", self.density),
            ("outflow", self.outflow),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::OutOfRange { what, value });
            }
        }
        if !(0.0..=1.0).contains(&self.av_share) {
            return Err(Error::OutOfRange {
                what: "av share",
                value: self.av_share,
            });
        }
        if self.end <= self.start {
            return Err(Error::OutOfRange {
                what: "interval length",
                value: f64::from(self.end) - f64::from(self.start),
            });
        }
        Ok(())
    }
}

/// Maximum outflow of `link` when a fraction `av_share` of the stream is
/// automated and each automated vehicle consumes `capacity_factor` of a
/// conventional vehicle's share of capacity.
pub fn effective_flow_capacity(link: &Link, av_share: f64, capacity_factor: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&av_share) {
        return Err(Error::OutOfRange {
            what: "av share",
            value: av_share,
        });
    }
    if !(capacity_factor > 0.0 && capacity_factor <= 1.0) {
        return Err(Error::OutOfRange {
            what: "capacity factor",
            value: capacity_factor,
        });
    }
    Ok(link.flow_capacity / (1.0 - av_share + av_share * capacity_factor))
}

/// Space-mean speed `q / k` in m/s.
///
/// An empty link reports its free speed. Measurement transients can make
/// `q / k` overshoot the free speed; the result is capped there.
pub fn average_speed(obs: &FlowObservation, link: &Link) -> Result<f64> {
    obs.validate()?;
    if obs.density == 0.0 {
        return Ok(link.free_speed);
    }
    let kmh = obs.outflow / obs.density;
    Ok((kmh * METERS_PER_KM / SECONDS_PER_HOUR).min(link.free_speed))
}

/// Delay in vehicle-hours accumulated by the users of the later interval
/// because the link slowed down between the two intervals. Zero unless the
/// speed decreased.
pub fn link_delay(obs_t: &FlowObservation, obs_next: &FlowObservation, link: &Link) -> Result<f64> {
    if obs_t.link != obs_next.link {
        return Err(Error::MismatchedLinks(obs_t.link, obs_next.link));
    }
    let u_t = average_speed(obs_t, link)?;
    let u_next = average_speed(obs_next, link)?;
    if u_next >= u_t {
        return Ok(0.0);
    }
    // A standing queue has no defined q/k speed; a vehicle stuck there has
    // spent at least the whole interval on the link.
    let floor = link.length / f64::from(obs_next.end - obs_next.start);
    let tt = |u: f64| link.length / u.max(floor);
    let per_vehicle = (tt(u_next) - tt(u_t)).max(0.0) / SECONDS_PER_HOUR;
    Ok(per_vehicle * f64::from(obs_next.users))
}

/// Extra vehicles implied by a drop in outflow between two intervals, counted
/// only when both outflow and speed decrease.
pub fn additional_users(
    obs_t: &FlowObservation,
    obs_next: &FlowObservation,
    link: &Link,
) -> Result<f64> {
    if obs_t.link != obs_next.link {
        return Err(Error::MismatchedLinks(obs_t.link, obs_next.link));
    }
    let u_t = average_speed(obs_t, link)?;
    let u_next = average_speed(obs_next, link)?;
    if obs_next.outflow < obs_t.outflow && u_next < u_t {
        Ok((obs_t.outflow - obs_next.outflow) * obs_next.duration_hours())
    } else {
        Ok(0.0)
    }
}
