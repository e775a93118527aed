//! Toll schedules derived from observed traffic.

use std::collections::{BTreeMap, BTreeSet};

use super::schedule::{McpToll, TimeWindow, TollSchedule, TravelTimeToll};
use crate::error::{Error, Result};
use crate::mobsim::{ExecutedDay, FlowSeries, MEASUREMENT_INTERVAL};
use crate::network::{additional_users, link_delay, LinkId, Network, SECONDS_PER_HOUR};
use crate::scoring::{vtts, ScoringConfig};

/// Links whose hourly volume reaches `threshold` times their flow capacity
/// in at least one clock hour of the peak windows.
pub fn select_congested_links(
    series: &FlowSeries,
    network: &Network,
    threshold: f64,
    windows: &[TimeWindow],
) -> Result<BTreeSet<LinkId>> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::OutOfRange {
            what: "V/C threshold",
            value: threshold,
        });
    }
    if series.n_links() == 0 {
        return Err(Error::Malformed {
            what: "flow observations",
            reason: "no links observed".into(),
        });
    }
    // observation indices of every clock hour that overlaps a peak window
    let mut hours: BTreeMap<(usize, u32), Vec<usize>> = BTreeMap::new();
    for (w, window) in windows.iter().enumerate() {
        for k in (0..series.n_intervals).filter(|&k| window.contains(k as u32 * series.interval)) {
            let hour = k as u32 * series.interval / SECONDS_PER_HOUR as u32;
            hours.entry((w, hour)).or_default().push(k);
        }
    }
    let per_window: Vec<Vec<usize>> = hours.into_values().collect();
    if per_window.is_empty() {
        return Err(Error::Malformed {
            what: "flow observations",
            reason: "no observations inside the peak windows".into(),
        });
    }
    let mut selected = BTreeSet::new();
    for link in network.link_ids() {
        let obs = series.link(link);
        let capacity = network.link(link).flow_capacity;
        let congested = per_window.iter().any(|ks| {
            let hours = ks.len() as f64 * f64::from(series.interval) / SECONDS_PER_HOUR;
            let volume: u32 = ks.iter().map(|&k| obs[k].users).sum();
            f64::from(volume) / hours / capacity >= threshold
        });
        if congested {
            selected.insert(link);
        }
    }
    Ok(selected)
}

/// Marginal cost charge in dollars for `delay` vehicle-hours caused by
/// `extra_users` additional vehicles.
pub fn mcp_toll(delay: f64, vtts: f64, extra_users: f64) -> f64 {
    if extra_users > 0.0 {
        (delay * vtts / extra_users).max(0.0)
    } else {
        0.0
    }
}

/// Network congestion component in dollars per vehicle-hour.
pub fn traveltime_sigma(total_delay: f64, vtts: f64, departures: f64, mean_trip_hours: f64) -> f64 {
    if departures > 0.0 && mean_trip_hours > 0.0 {
        (total_delay * vtts / (departures * mean_trip_hours)).max(0.0)
    } else {
        0.0
    }
}

/// Delay and additional users between observation `k - 1` and `k`.
fn pair_terms(series: &FlowSeries, network: &Network, link: LinkId, k: usize) -> Result<(f64, f64)> {
    let l = network.link(link);
    let (prev, next) = (series.get(link, k - 1), series.get(link, k));
    Ok((link_delay(prev, next, l)?, additional_users(prev, next, l)?))
}

fn check_series(series: &FlowSeries, interval: u32) -> Result<usize> {
    if series.interval != MEASUREMENT_INTERVAL {
        return Err(Error::Config(format!(
            "toll computation needs {MEASUREMENT_INTERVAL} s observations, got {} s",
            series.interval
        )));
    }
    if interval == 0 || interval % series.interval != 0 {
        return Err(Error::Config(format!(
            "publication interval {interval} s is not a multiple of {} s",
            series.interval
        )));
    }
    Ok((interval / series.interval) as usize)
}

/// Link tolls per publication interval from five-minute observations.
///
/// Delays and additional users of the consecutive observation pairs ending
/// inside a publication interval are summed before taking the quotient.
pub fn mcp_schedule(
    series: &FlowSeries,
    network: &Network,
    vtts: f64,
    interval: u32,
    cap_cents: i64,
    analyzed: Option<&BTreeSet<LinkId>>,
) -> Result<TollSchedule> {
    let per = check_series(series, interval)?;
    let n_pub = series.n_intervals.div_ceil(per);
    let mut tolls = BTreeMap::new();
    for link in network.link_ids() {
        if analyzed.is_some_and(|a| !a.contains(&link)) {
            continue;
        }
        let mut row = vec![0i64; n_pub];
        for (m, cents) in row.iter_mut().enumerate() {
            let (mut d, mut dn) = (0.0, 0.0);
            for k in (m * per..((m + 1) * per).min(series.n_intervals)).filter(|&k| k > 0) {
                let (dk, nk) = pair_terms(series, network, link, k)?;
                d += dk;
                dn += nk;
            }
            let c = (mcp_toll(d, vtts, dn) * 100.0).round() as i64;
            *cents = c.clamp(0, cap_cents);
        }
        if row.iter().any(|&c| c > 0) {
            tolls.insert(link, row);
        }
    }
    Ok(TollSchedule::Mcp(McpToll {
        interval,
        cap_cents,
        tolls,
    }))
}

/// Network-wide travel-time charge per publication interval.
///
/// `departures` holds the departure times of network trips and
/// `mean_trip_hours` the average network trip duration at free-flow speed.
pub fn traveltime_schedule(
    series: &FlowSeries,
    network: &Network,
    vtts: f64,
    alpha: f64,
    interval: u32,
    departures: &[u32],
    mean_trip_hours: f64,
) -> Result<TollSchedule> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: alpha,
        });
    }
    let per = check_series(series, interval)?;
    let n_pub = series.n_intervals.div_ceil(per);
    let mut delay = vec![0.0; n_pub];
    for link in network.link_ids() {
        for k in 1..series.n_intervals {
            delay[k / per] += pair_terms(series, network, link, k)?.0;
        }
    }
    let mut counts = vec![0u32; n_pub];
    for &t in departures {
        if let Some(c) = counts.get_mut((t / interval) as usize) {
            *c += 1;
        }
    }
    let sigma = delay
        .iter()
        .zip(&counts)
        .map(|(&d, &s)| traveltime_sigma(d, vtts, f64::from(s), mean_trip_hours))
        .collect();
    Ok(TollSchedule::TravelTime(TravelTimeToll::new(interval, alpha, sigma)))
}

/// Departure times and the free-flow duration `L / U` of network trips:
/// `L` is the mean distance travelled aboard, `U` the network's mean free
/// speed.
pub fn network_trip_profile(days: &[ExecutedDay], network: &Network) -> (Vec<u32>, f64) {
    let trips: Vec<_> = days
        .iter()
        .flat_map(|d| &d.trips)
        .filter(|t| t.mode.is_network())
        .collect();
    let departures = trips.iter().map(|t| t.depart).collect();
    let done: Vec<f64> = trips
        .iter()
        .filter(|t| t.arrive.is_some())
        .map(|t| t.in_vehicle_distance)
        .collect();
    let hours = if done.is_empty() {
        0.0
    } else {
        let mean_length = done.iter().sum::<f64>() / done.len() as f64;
        mean_length / network.mean_free_speed() / SECONDS_PER_HOUR
    };
    (departures, hours)
}

/// Trip-weighted mean value of travel time over executed network trips.
/// Falls back to the car value when there are none.
pub fn network_vtts(days: &[ExecutedDay], scoring: &ScoringConfig) -> Result<f64> {
    let mut total = 0.0;
    let mut n = 0usize;
    for t in days.iter().flat_map(|d| &d.trips).filter(|t| t.mode.is_network()) {
        total += vtts(scoring.mode(t.mode), scoring)?;
        n += 1;
    }
    if n == 0 {
        return vtts(scoring.mode(crate::demand::Mode::Car), scoring);
    }
    Ok(total / n as f64)
}
