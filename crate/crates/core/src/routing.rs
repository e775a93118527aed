//! Least-cost routing on time-dependent link travel times.
//!
//! Paths are searched link by link: a trip starts at the downstream end of
//! its origin link and ends once the destination link has been traversed.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::dispatch::TravelTimeEstimate;
use crate::error::{Error, Result};
use crate::network::{LinkId, Network, SECONDS_PER_HOUR};
use crate::pricing::TollSchedule;

/// Width of the travel-time bins, seconds.
pub const TRAVEL_TIME_BIN: u32 = 900;

/// Mean link travel time per entry-time bin. Bins without observations fall
/// back to free flow.
#[derive(Clone, Debug, PartialEq)]
pub struct TravelTimes {
    bin: u32,
    n_bins: usize,
    /// `link * n_bins + bin`, seconds.
    times: Vec<f64>,
}

impl TravelTimes {
    pub fn free_flow(network: &Network, horizon: u32) -> Self {
        let n_bins = horizon.div_ceil(TRAVEL_TIME_BIN).max(1) as usize;
        let times = network
            .links()
            .iter()
            .flat_map(|l| std::iter::repeat(f64::from(l.free_flow_time())).take(n_bins))
            .collect();
        TravelTimes {
            bin: TRAVEL_TIME_BIN,
            n_bins,
            times,
        }
    }

    /// Averages observed traversals `(link, enter, leave)` by entry bin.
    pub fn from_traversals(
        network: &Network,
        horizon: u32,
        traversals: impl IntoIterator<Item = (LinkId, u32, u32)>,
    ) -> Self {
        let mut tt = Self::free_flow(network, horizon);
        let mut sum = vec![0.0; tt.times.len()];
        let mut count = vec![0u32; tt.times.len()];
        for (link, enter, leave) in traversals {
            let i = tt.slot(link, enter);
            sum[i] += f64::from(leave.saturating_sub(enter));
            count[i] += 1;
        }
        for (i, (&s, &c)) in sum.iter().zip(&count).enumerate() {
            if c > 0 {
                tt.times[i] = s / f64::from(c);
            }
        }
        tt
    }

    fn slot(&self, link: LinkId, t: u32) -> usize {
        let b = ((t / self.bin) as usize).min(self.n_bins - 1);
        link.index() * self.n_bins + b
    }

    /// Expected seconds to traverse `link` when entering at `t`.
    pub fn get(&self, link: LinkId, t: f64) -> f64 {
        self.times[self.slot(link, t.max(0.0) as u32)]
    }
}

/// Generalized cost of a link traversal in utils.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostParams {
    /// Disutility of travel time, utils per hour.
    pub time_utils_per_hour: f64,
    /// Marginal utility of money, utils per dollar.
    pub money_utils_per_dollar: f64,
    /// Out-of-pocket vehicle cost, dollars per mile.
    pub distance_dollars_per_mile: f64,
}

impl CostParams {
    /// Pure travel-time minimization.
    pub fn time_only() -> Self {
        CostParams {
            time_utils_per_hour: 1.0,
            money_utils_per_dollar: 0.0,
            distance_dollars_per_mile: 0.0,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Label {
    cost: f64,
    link: LinkId,
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, then link id
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.link.cmp(&self.link))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Search {
    cost: Vec<f64>,
    time: Vec<f64>,
    pred: Vec<Option<LinkId>>,
}

/// Link-based Dijkstra from the end of `origin` at time `start`.
/// `step(link, enter_time)` returns `(travel_time, cost)` of a traversal.
fn search(
    network: &Network,
    origin: LinkId,
    start: f64,
    target: Option<LinkId>,
    mut step: impl FnMut(LinkId, f64) -> (f64, f64),
) -> Search {
    let n = network.n_links();
    let mut s = Search {
        cost: vec![f64::INFINITY; n],
        time: vec![f64::INFINITY; n],
        pred: vec![None; n],
    };
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    let relax = |s: &mut Search, heap: &mut BinaryHeap<Label>, from: Option<LinkId>, base_cost: f64, t: f64, l: LinkId, step: &mut dyn FnMut(LinkId, f64) -> (f64, f64)| {
        let (tt, c) = step(l, t);
        let cost = base_cost + c;
        if cost < s.cost[l.index()] {
            s.cost[l.index()] = cost;
            s.time[l.index()] = t + tt;
            s.pred[l.index()] = from;
            heap.push(Label { cost, link: l });
        }
    };
    for &l in network.out_links(network.link(origin).to) {
        relax(&mut s, &mut heap, None, 0.0, start, l, &mut step);
    }
    while let Some(Label { cost, link }) = heap.pop() {
        if done[link.index()] || cost > s.cost[link.index()] {
            continue;
        }
        done[link.index()] = true;
        if Some(link) == target {
            break;
        }
        let t = s.time[link.index()];
        for &next in network.out_links(network.link(link).to) {
            if !done[next.index()] {
                relax(&mut s, &mut heap, Some(link), cost, t, next, &mut step);
            }
        }
    }
    s
}

/// Least generalized-cost path from `origin` to `destination` departing at
/// `departure`. Tolls are monetized with the marginal utility of money.
pub fn route(
    network: &Network,
    times: &TravelTimes,
    tolls: &TollSchedule,
    params: &CostParams,
    origin: LinkId,
    destination: LinkId,
    departure: u32,
) -> Result<Vec<LinkId>> {
    if origin == destination {
        return Ok(Vec::new());
    }
    let s = search(network, origin, f64::from(departure), Some(destination), |l, t| {
        let tt = times.get(l, t);
        let link = network.link(l);
        let dollars = params.distance_dollars_per_mile * link.length_miles()
            + tolls.expected_link_dollars(network, l, t as u32, tt);
        let cost = params.time_utils_per_hour * tt / SECONDS_PER_HOUR + params.money_utils_per_dollar * dollars;
        (tt, cost)
    });
    if !s.cost[destination.index()].is_finite() {
        return Err(Error::Unreachable {
            from: origin,
            to: destination,
        });
    }
    let mut path = vec![destination];
    let mut at = destination;
    while let Some(p) = s.pred[at.index()] {
        path.push(p);
        at = p;
    }
    path.reverse();
    Ok(path)
}

/// All-pairs free-flow travel times between links, seconds.
#[derive(Clone, Debug)]
pub struct FreeFlowTable {
    n: usize,
    times: Vec<f64>,
}

impl FreeFlowTable {
    pub fn new(network: &Network) -> Self {
        let n = network.n_links();
        let mut times = Vec::with_capacity(n * n);
        for o in network.link_ids() {
            let s = search(network, o, 0.0, None, |l, _| {
                let tt = f64::from(network.link(l).free_flow_time());
                (tt, tt)
            });
            for d in network.link_ids() {
                times.push(if d == o { 0.0 } else { s.cost[d.index()] });
            }
        }
        FreeFlowTable { n, times }
    }

    pub fn get(&self, from: LinkId, to: LinkId) -> f64 {
        self.times[from.index() * self.n + to.index()]
    }
}

impl TravelTimeEstimate for FreeFlowTable {
    fn estimate(&self, from: LinkId, to: LinkId) -> f64 {
        self.get(from, to)
    }
}
