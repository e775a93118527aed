//! Simulation feedback loop for the advanced schemes.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::schedule::{SchemeKind, TollSchedule, MCP_CAP_CENTS, MCP_INTERVAL, TRAVEL_TIME_INTERVAL};
use super::schemes::{mcp_schedule, network_trip_profile, network_vtts, traveltime_schedule};
use crate::analytics::{welfare_change, Monetization};
use crate::error::{Error, Result};
use crate::mobsim::{executed_days, measure_flows, ExecutedDay, MEASUREMENT_INTERVAL};
use crate::network::LinkId;
use crate::replanning::{run_to_equilibrium, RelaxedState, ReplanningConfig};
use crate::scenario::Scenario;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OuterLoopConfig {
    pub max_outer_iterations: usize,
    /// Stopping threshold for the travel-time change, percent.
    pub target_travel_time_change: f64,
    /// Stopping threshold for the utility change, percent.
    pub target_utility_change: f64,
    pub alpha: f64,
    pub mcp_cap_cents: i64,
    pub mcp_interval: u32,
    pub travel_time_interval: u32,
    /// Links considered by the MCP scheme; all when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analyzed_links: Option<BTreeSet<LinkId>>,
}

impl Default for OuterLoopConfig {
    fn default() -> Self {
        OuterLoopConfig {
            max_outer_iterations: 15,
            target_travel_time_change: 5.0,
            target_utility_change: 5.0,
            alpha: 0.1,
            mcp_cap_cents: MCP_CAP_CENTS,
            mcp_interval: MCP_INTERVAL,
            travel_time_interval: TRAVEL_TIME_INTERVAL,
            analyzed_links: None,
        }
    }
}

/// Travel-time change between two runs over trips matched by agent, trip
/// index and mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TravelTimeChange {
    /// Mean over agents with matched trips of the summed relative changes,
    /// percent.
    pub value: f64,
    pub matched: usize,
    /// Trips without a counterpart, with a different mode, unfinished, or
    /// of zero duration in the later run.
    pub unmatched: usize,
    pub agents: usize,
}

pub fn travel_time_change(prev: &[ExecutedDay], next: &[ExecutedDay]) -> TravelTimeChange {
    let mut total = 0.0;
    let (mut matched, mut unmatched, mut agents) = (0, 0, 0);
    for (p, n) in prev.iter().zip(next) {
        let mut sum = 0.0;
        let mut any = false;
        for i in 0..p.trips.len().max(n.trips.len()) {
            let pair = p.trips.get(i).zip(n.trips.get(i));
            let times = pair.and_then(|(a, b)| {
                if a.mode != b.mode {
                    return None;
                }
                match (a.travel_time(), b.travel_time()) {
                    (Some(x), Some(y)) if y > 0 => Some((f64::from(x), f64::from(y))),
                    _ => None,
                }
            });
            match times {
                Some((before, after)) => {
                    sum += (before - after).abs() / after * 100.0;
                    matched += 1;
                    any = true;
                }
                None => unmatched += 1,
            }
        }
        if any {
            total += sum;
            agents += 1;
        }
    }
    TravelTimeChange {
        value: if agents == 0 { 0.0 } else { total / agents as f64 },
        matched,
        unmatched,
        agents,
    }
}

/// Mean absolute relative change of agent utilities, percent. Agents with
/// a zero utility in the later run are skipped.
pub fn utility_change(prev: &[f64], next: &[f64]) -> f64 {
    let terms: Vec<f64> = prev
        .iter()
        .zip(next)
        .filter(|(_, n)| **n != 0.0)
        .map(|(p, n)| (p - n).abs() / n.abs() * 100.0)
        .collect();
    if terms.is_empty() {
        0.0
    } else {
        terms.iter().sum::<f64>() / terms.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterStep {
    /// 1 for the toll-free start.
    pub k: usize,
    pub revenue_cents: i64,
    /// Links with a nonzero toll (MCP) or intervals with a nonzero rate
    /// (travel time).
    pub tolled_cells: usize,
    pub max_toll_cents: i64,
    pub travel_time_change: Option<TravelTimeChange>,
    pub utility_change: Option<f64>,
    pub welfare_change_cents: i64,
    pub mean_score: f64,
    pub inner_converged: bool,
}

#[derive(Clone, Debug)]
pub struct TollConvergence {
    pub kind: SchemeKind,
    /// Schedule of the returned iterate.
    pub schedule: TollSchedule,
    pub state: RelaxedState,
    pub baseline: RelaxedState,
    pub trace: Vec<OuterStep>,
    pub converged: bool,
    /// `k` of the returned iterate.
    pub selected: usize,
}

fn schedule_size(s: &TollSchedule) -> (usize, i64) {
    match s {
        TollSchedule::Mcp(m) => (m.tolls.len(), m.tolls.values().flatten().copied().max().unwrap_or(0)),
        TollSchedule::TravelTime(t) => (
            t.cents_per_hour.iter().filter(|&&c| c > 0).count(),
            t.cents_per_hour.iter().copied().max().unwrap_or(0),
        ),
        _ => (0, 0),
    }
}

/// Schedule of an advanced scheme computed from the traffic of `state`.
pub fn schedule_from_state(
    scenario: &Scenario,
    kind: SchemeKind,
    state: &RelaxedState,
    config: &OuterLoopConfig,
) -> Result<TollSchedule> {
    let network = &scenario.network;
    let series = measure_flows(&state.log, network, MEASUREMENT_INTERVAL);
    let days = executed_days(&state.log, network, state.agents.len());
    let vtts = network_vtts(&days, &scenario.scoring)?;
    match kind {
        SchemeKind::Mcp => mcp_schedule(
            &series,
            network,
            vtts,
            config.mcp_interval,
            config.mcp_cap_cents,
            config.analyzed_links.as_ref(),
        ),
        SchemeKind::TravelTime => {
            let (departures, r) = network_trip_profile(&days, network);
            traveltime_schedule(&series, network, vtts, config.alpha, config.travel_time_interval, &departures, r)
        }
        other => Err(Error::Config(format!(
            "{} is not an advanced scheme",
            other.as_str()
        ))),
    }
}

/// Alternates schedule updates and relaxation until consecutive runs agree
/// on travel times and utilities. Every run starts from the scenario's
/// initial plans with the same seed. Returns the tolled iterate with the
/// largest welfare change against the toll-free start.
pub fn converge_tolls(
    scenario: &Scenario,
    kind: SchemeKind,
    config: &OuterLoopConfig,
    replanning: &ReplanningConfig,
    seed: u64,
) -> Result<TollConvergence> {
    let baseline = run_to_equilibrium(scenario, &TollSchedule::None, replanning, seed)?;
    converge_tolls_from(scenario, kind, config, replanning, seed, baseline)
}

/// [`converge_tolls`] with an already computed toll-free equilibrium.
pub fn converge_tolls_from(
    scenario: &Scenario,
    kind: SchemeKind,
    config: &OuterLoopConfig,
    replanning: &ReplanningConfig,
    seed: u64,
    baseline: RelaxedState,
) -> Result<TollConvergence> {
    if !kind.is_advanced() {
        return Err(Error::Config(format!(
            "{} is not an advanced scheme",
            kind.as_str()
        )));
    }
    if config.max_outer_iterations < 2 {
        return Err(Error::Config("the outer loop needs at least two iterations".into()));
    }
    let network = &scenario.network;
    let beta = scenario.scoring.beta_money;
    let mut trace = vec![OuterStep {
        k: 1,
        revenue_cents: baseline.log.toll_revenue_cents(),
        tolled_cells: 0,
        max_toll_cents: 0,
        travel_time_change: None,
        utility_change: None,
        welfare_change_cents: 0,
        mean_score: baseline.mean_score(),
        inner_converged: baseline.converged,
    }];

    let mut prev = baseline.clone();
    let mut prev_days = executed_days(&prev.log, network, prev.agents.len());
    let mut best: Option<(i64, usize, TollSchedule, RelaxedState)> = None;
    let mut converged = false;
    for k in 2..=config.max_outer_iterations {
        let schedule = schedule_from_state(scenario, kind, &prev, config)?;
        let state = run_to_equilibrium(scenario, &schedule, replanning, seed)?;
        let days = executed_days(&state.log, network, state.agents.len());
        let dtt = travel_time_change(&prev_days, &days);
        let du = utility_change(&prev.executed_scores(), &state.executed_scores());
        let welfare = welfare_change(&baseline, &state, network, beta, Monetization::Division)?;
        let (cells, max) = schedule_size(&schedule);
        trace.push(OuterStep {
            k,
            revenue_cents: welfare.revenue_cents,
            tolled_cells: cells,
            max_toll_cents: max,
            travel_time_change: Some(dtt),
            utility_change: Some(du),
            welfare_change_cents: welfare.welfare_change_cents,
            mean_score: state.mean_score(),
            inner_converged: state.converged,
        });
        if best.as_ref().is_none_or(|b| welfare.welfare_change_cents > b.0) {
            best = Some((welfare.welfare_change_cents, k, schedule, state.clone()));
        }
        if dtt.value <= config.target_travel_time_change && du <= config.target_utility_change {
            converged = true;
            break;
        }
        prev = state;
        prev_days = days;
    }
    let (_, selected, schedule, state) = best.expect("at least one tolled iterate");
    Ok(TollConvergence {
        kind,
        schedule,
        state,
        baseline,
        trace,
        converged,
        selected,
    })
}

impl TollConvergence {
    pub fn write_trace_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "k",
            "revenue_cents",
            "tolled_cells",
            "max_toll_cents",
            "travel_time_change_pct",
            "matched_trips",
            "unmatched_trips",
            "utility_change_pct",
            "welfare_change_cents",
            "mean_score",
            "inner_converged",
            "selected",
        ])?;
        for s in &self.trace {
            let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.4}"));
            out.write_record([
                s.k.to_string(),
                s.revenue_cents.to_string(),
                s.tolled_cells.to_string(),
                s.max_toll_cents.to_string(),
                opt(s.travel_time_change.map(|c| c.value)),
                s.travel_time_change.map_or(String::new(), |c| c.matched.to_string()),
                s.travel_time_change.map_or(String::new(), |c| c.unmatched.to_string()),
                opt(s.utility_change),
                s.welfare_change_cents.to_string(),
                format!("{:.4}", s.mean_score),
                s.inner_converged.to_string(),
                (s.k == self.selected).to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}
