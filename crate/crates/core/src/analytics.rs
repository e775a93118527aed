//! Traffic metrics and welfare comparison between runs.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::Mode;
use crate::error::{Error, Result};
use crate::mobsim::{measure_flows, traversals, EventKind, EventLog, MEASUREMENT_INTERVAL};
use crate::network::{LinkId, Network, METERS_PER_MILE, SECONDS_PER_HOUR};
use crate::pricing::{distance_schedule, facility_schedule, select_congested_links, SchemeKind, TollSchedule, PEAK_WINDOWS};
use crate::replanning::{run_to_equilibrium, RelaxedState, ReplanningConfig};
use crate::scenario::Scenario;

/// V/C ratio at which the facility scheme tolls a link.
pub const FACILITY_VC_THRESHOLD: f64 = 0.9;

/// Fare levels tested for the traditional schemes, dollars.
pub const DEFAULT_FARE_GRID: [f64; 3] = [0.10, 0.20, 0.30];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficMetrics {
    /// Vehicle miles on the network.
    pub vmt: f64,
    /// Miles driven by fleet vehicles on their way to a pickup.
    pub empty_vmt: f64,
    /// Time lost against free flow over completed link traversals,
    /// vehicle-hours.
    pub total_delay: f64,
    /// Shares of executed trips, in [`Mode::ALL`] order.
    pub mode_shares: [f64; 5],
    pub trips: usize,
    /// True when some trips were still underway at the end of the day.
    pub partial: bool,
}

pub fn traffic_metrics(log: &EventLog, network: &Network) -> TrafficMetrics {
    let mut meters = 0.0;
    let mut empty = 0.0;
    let mut counts = [0usize; 5];
    let mut partial = false;
    for e in &log.events {
        match e.kind {
            EventKind::LinkEnter { link, .. } => meters += network.link(link).length,
            EventKind::SavEmptyDrive { link, .. } => empty += network.link(link).length,
            EventKind::Depart { mode, .. } => {
                counts[Mode::ALL.iter().position(|m| *m == mode).expect("known mode")] += 1;
            }
            EventKind::Stuck { .. } => partial = true,
            _ => {}
        }
    }
    let delay: f64 = traversals(log)
        .iter()
        .map(|&(l, enter, leave)| f64::from(leave - enter) - f64::from(network.link(l).free_flow_time()))
        .sum();
    let trips: usize = counts.iter().sum();
    TrafficMetrics {
        vmt: meters / METERS_PER_MILE,
        empty_vmt: empty / METERS_PER_MILE,
        total_delay: delay / SECONDS_PER_HOUR,
        mode_shares: counts.map(|c| if trips == 0 { 0.0 } else { c as f64 / trips as f64 }),
        trips,
        partial,
    }
}

/// How a utility difference is converted to dollars.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monetization {
    /// Divide by the marginal utility of money.
    #[default]
    Division,
    /// Multiply by the marginal utility of money, as the welfare formula is
    /// sometimes printed. Not dimensionally dollars; for comparison only.
    Literal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelfareReport {
    pub n_agents: usize,
    pub revenue_cents: i64,
    pub consumer_surplus_change_cents: i64,
    /// Revenue plus consumer surplus change.
    pub welfare_change_cents: i64,
    /// Monetized utility of the baseline plus its toll revenue, dollars.
    pub baseline_welfare: f64,
    pub welfare_change_pct: f64,
    pub consumer_surplus_change_per_capita: f64,
    pub welfare_change_per_capita: f64,
    /// Relative change of each mode share in percent; None where the
    /// baseline share is zero.
    pub mode_share_change_pct: [Option<f64>; 5],
    pub baseline: TrafficMetrics,
    pub tolled: TrafficMetrics,
    pub monetization: Monetization,
}

fn monetize(utils: f64, beta_money: f64, form: Monetization) -> f64 {
    match form {
        Monetization::Division => utils / beta_money,
        Monetization::Literal => utils * beta_money,
    }
}

/// Compares a tolled relaxed state with the no-toll baseline of the same
/// population.
pub fn welfare_change(
    baseline: &RelaxedState,
    tolled: &RelaxedState,
    network: &Network,
    beta_money: f64,
    form: Monetization,
) -> Result<WelfareReport> {
    if !(beta_money > 0.0) {
        return Err(Error::ZeroMoneyUtility);
    }
    if baseline.agents.len() != tolled.agents.len()
        || baseline.agents.iter().zip(&tolled.agents).any(|(a, b)| a.name != b.name)
    {
        return Err(Error::PopulationMismatch(format!(
            "{} baseline agents vs {} tolled agents",
            baseline.agents.len(),
            tolled.agents.len()
        )));
    }
    let n = baseline.agents.len();
    let before = baseline.executed_scores();
    let after = tolled.executed_scores();
    let utility_change: f64 = before.iter().zip(&after).map(|(v, w)| w - v).sum();
    let cs = (monetize(utility_change, beta_money, form) * 100.0).round() as i64;
    let revenue = tolled.log.toll_revenue_cents();
    let welfare = revenue + cs;
    let baseline_welfare =
        monetize(before.iter().sum::<f64>(), beta_money, form) + baseline.log.toll_revenue_cents() as f64 / 100.0;
    let bm = traffic_metrics(&baseline.log, network);
    let tm = traffic_metrics(&tolled.log, network);
    let mut share_change = [None; 5];
    for (k, c) in share_change.iter_mut().enumerate() {
        if bm.mode_shares[k] > 0.0 {
            *c = Some((tm.mode_shares[k] - bm.mode_shares[k]) / bm.mode_shares[k] * 100.0);
        }
    }
    Ok(WelfareReport {
        n_agents: n,
        revenue_cents: revenue,
        consumer_surplus_change_cents: cs,
        welfare_change_cents: welfare,
        baseline_welfare,
        welfare_change_pct: if baseline_welfare == 0.0 {
            0.0
        } else {
            welfare as f64 / 100.0 / baseline_welfare.abs() * 100.0
        },
        consumer_surplus_change_per_capita: cs as f64 / 100.0 / n as f64,
        welfare_change_per_capita: welfare as f64 / 100.0 / n as f64,
        mode_share_change_pct: share_change,
        baseline: bm,
        tolled: tm,
        monetization: form,
    })
}

impl WelfareReport {
    /// Two-column `metric,value` table.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["metric", "value"])?;
        let mut row = |k: &str, v: String| out.write_record([k, v.as_str()]);
        row("agents", self.n_agents.to_string())?;
        row("baseline_welfare_dollars", format!("{:.2}", self.baseline_welfare))?;
        row("revenue_dollars", cents(self.revenue_cents))?;
        row("consumer_surplus_change_dollars", cents(self.consumer_surplus_change_cents))?;
        row("welfare_change_dollars", cents(self.welfare_change_cents))?;
        row(
            "consumer_surplus_change_per_capita",
            format!("{:.4}", self.consumer_surplus_change_per_capita),
        )?;
        row("welfare_change_with_revenues_per_capita", format!("{:.4}", self.welfare_change_per_capita))?;
        row("total_welfare_change_pct", format!("{:.4}", self.welfare_change_pct))?;
        for (label, m) in [("baseline", &self.baseline), ("tolled", &self.tolled)] {
            row(&format!("{label}_vmt"), format!("{:.3}", m.vmt))?;
            row(&format!("{label}_empty_vmt"), format!("{:.3}", m.empty_vmt))?;
            row(&format!("{label}_total_delay_veh_h"), format!("{:.4}", m.total_delay))?;
            for (k, mode) in Mode::ALL.iter().enumerate() {
                row(&format!("{label}_share_{}", mode.as_str()), format!("{:.4}", m.mode_shares[k]))?;
            }
        }
        for (k, mode) in Mode::ALL.iter().enumerate() {
            let v = self.mode_share_change_pct[k].map_or(String::new(), |c| format!("{c:.2}"));
            row(&format!("share_change_pct_{}", mode.as_str()), v)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        format!(
            "revenue ${}; consumer surplus change ${} (${:.2} per capita); \
             welfare change ${} (${:.2} per capita, {:.2}%); \
             delay {:.2} -> {:.2} veh-h; VMT {:.1} -> {:.1}",
            cents(self.revenue_cents),
            cents(self.consumer_surplus_change_cents),
            self.consumer_surplus_change_per_capita,
            cents(self.welfare_change_cents),
            self.welfare_change_per_capita,
            self.welfare_change_pct,
            self.baseline.total_delay,
            self.tolled.total_delay,
            self.baseline.vmt,
            self.tolled.vmt,
        )
    }
}

fn cents(c: i64) -> String {
    let sign = if c < 0 { "-" } else { "" };
    format!("{sign}{}.{:02}", c.abs() / 100, c.abs() % 100)
}

/// Links tolled by the facility scheme: those congested in the peaks of
/// the baseline.
pub fn facility_links(baseline: &RelaxedState, network: &Network) -> Result<BTreeSet<LinkId>> {
    let series = measure_flows(&baseline.log, network, MEASUREMENT_INTERVAL);
    select_congested_links(&series, network, FACILITY_VC_THRESHOLD, &PEAK_WINDOWS)
}

/// Schedule of a traditional scheme at `fare` dollars (per link or per
/// mile).
pub fn traditional_schedule(kind: SchemeKind, fare: f64, links: &BTreeSet<LinkId>) -> Result<TollSchedule> {
    match kind {
        SchemeKind::Facility => Ok(facility_schedule(links.clone(), fare)),
        SchemeKind::Distance => Ok(distance_schedule(fare)),
        other => Err(Error::Config(format!("{} has no scalar fare", other.as_str()))),
    }
}

#[derive(Clone, Debug)]
pub struct SweepCell {
    pub fare: f64,
    pub converged: bool,
    pub report: WelfareReport,
    pub state: RelaxedState,
}

#[derive(Clone, Debug)]
pub struct SweepTable {
    pub kind: SchemeKind,
    pub cells: Vec<SweepCell>,
    /// Index of the converged cell with the largest welfare change.
    pub best: Option<usize>,
}

/// Index of the converged cell with the largest welfare change; the lower
/// fare wins ties.
pub fn best_cell(cells: &[SweepCell]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in cells.iter().enumerate() {
        if !c.converged {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let (x, y) = (c.report.welfare_change_cents, cells[b].report.welfare_change_cents);
                x > y || (x == y && c.fare < cells[b].fare)
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// One equilibrium per fare level of a traditional scheme, compared with
/// the baseline.
pub fn sweep_report(
    scenario: &Scenario,
    kind: SchemeKind,
    fares: &[f64],
    baseline: &RelaxedState,
    replanning: &ReplanningConfig,
    seed: u64,
) -> Result<SweepTable> {
    if fares.is_empty() {
        return Err(Error::Config("fare grid is empty".into()));
    }
    if let Some(f) = fares.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
        return Err(Error::OutOfRange {
            what: "fare",
            value: *f,
        });
    }
    let links = match kind {
        SchemeKind::Facility => facility_links(baseline, &scenario.network)?,
        SchemeKind::Distance => BTreeSet::new(),
        other => return Err(Error::Config(format!("{} has no scalar fare", other.as_str()))),
    };
    let cells = fares
        .par_iter()
        .map(|&fare| {
            let schedule = traditional_schedule(kind, fare, &links)?;
            let state = run_to_equilibrium(scenario, &schedule, replanning, seed)?;
            let report = welfare_change(
                baseline,
                &state,
                &scenario.network,
                scenario.scoring.beta_money,
                Monetization::Division,
            )?;
            Ok(SweepCell {
                fare,
                converged: state.converged,
                report,
                state,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = best_cell(&cells);
    Ok(SweepTable { kind, cells, best })
}

impl SweepTable {
    /// One row per fare level.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "scheme",
            "fare",
            "converged",
            "revenue_dollars",
            "consumer_surplus_change_per_capita",
            "welfare_change_with_revenues_per_capita",
            "total_welfare_change_pct",
            "total_delay_veh_h",
            "best",
        ])?;
        for (i, c) in self.cells.iter().enumerate() {
            out.write_record([
                self.kind.as_str().to_string(),
                format!("{:.2}", c.fare),
                c.converged.to_string(),
                cents(c.report.revenue_cents),
                format!("{:.4}", c.report.consumer_surplus_change_per_capita),
                format!("{:.4}", c.report.welfare_change_per_capita),
                format!("{:.4}", c.report.welfare_change_pct),
                format!("{:.4}", c.report.tolled.total_delay),
                (self.best == Some(i)).to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Fare levels as columns and welfare measures as rows, the best level
    /// marked with `*`.
    pub fn render(&self) -> String {
        let mut s = format!("{:<44}", format!("{} scheme", self.kind.as_str()));
        for (i, c) in self.cells.iter().enumerate() {
            let mark = if self.best == Some(i) { "*" } else { "" };
            s.push_str(&format!("{:>10}", format!("{:.2}{mark}", c.fare)));
        }
        s.push('\n');
        let rows: [(&str, fn(&WelfareReport) -> f64); 3] = [
            ("Consumer surplus change ($/capita/day)", |r| r.consumer_surplus_change_per_capita),
            ("Welfare change with revenues ($/capita/day)", |r| r.welfare_change_per_capita),
            ("Total welfare change (%)", |r| r.welfare_change_pct),
        ];
        for (label, f) in rows {
            s.push_str(&format!("{label:<44}"));
            for c in &self.cells {
                s.push_str(&format!("{:>10.2}", f(&c.report)));
            }
            s.push('\n');
        }
        s
    }
}
