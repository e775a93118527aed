//! Co-evolutionary plan improvement: logit selection, mutation and the
//! iteration loop towards a relaxed state.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::{Agent, Mode, Plan};
use crate::error::{Error, Result};
use crate::mobsim::{executed_days, simulate_day, travel_times, DayInput, EventLog, Fleet};
use crate::network::Network;
use crate::pricing::TollSchedule;
use crate::rng::{substream, Stream};
use crate::routing::{route, FreeFlowTable, TravelTimes};
use crate::scenario::Scenario;
use crate::scoring::{score_plan, ScoringConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReplanningConfig {
    /// Probability of choosing among existing plans.
    pub selection_weight: f64,
    pub departure_time_weight: f64,
    pub route_weight: f64,
    pub mode_weight: f64,
    /// Logit scale applied to plan scores.
    pub logit_scale: f64,
    pub max_iterations: usize,
    /// Iterations with innovation before an early switch to the
    /// selection-only tail is allowed.
    pub min_iterations: usize,
    /// Share of the run spent without innovation at the end.
    pub innovation_off_fraction: f64,
    /// Half-width of the uniform departure-time shift, seconds.
    pub departure_time_range: u32,
    /// Largest relative spread of the mean executed score over the window
    /// that counts as converged.
    pub tolerance: f64,
    pub window: usize,
    /// Plans kept per agent.
    pub memory: usize,
}

impl Default for ReplanningConfig {
    fn default() -> Self {
        ReplanningConfig {
            selection_weight: 0.7,
            departure_time_weight: 0.1,
            route_weight: 0.1,
            mode_weight: 0.1,
            logit_scale: 1.0,
            max_iterations: 150,
            min_iterations: 40,
            innovation_off_fraction: 0.2,
            departure_time_range: 1800,
            tolerance: 0.05,
            window: 10,
            memory: 5,
        }
    }
}

impl ReplanningConfig {
    pub fn innovation_weight(&self) -> f64 {
        self.departure_time_weight + self.route_weight + self.mode_weight
    }

    pub fn validate(&self) -> Result<()> {
        let weights = [
            self.selection_weight,
            self.departure_time_weight,
            self.route_weight,
            self.mode_weight,
        ];
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config("strategy weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("strategy weights sum to {total}, expected 1")));
        }
        if !(self.logit_scale.is_finite() && self.logit_scale > 0.0) {
            return Err(Error::OutOfRange {
                what: "logit scale",
                value: self.logit_scale,
            });
        }
        if !(0.0..1.0).contains(&self.innovation_off_fraction) {
            return Err(Error::OutOfRange {
                what: "innovation-off fraction",
                value: self.innovation_off_fraction,
            });
        }
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return Err(Error::OutOfRange {
                what: "equilibrium tolerance",
                value: self.tolerance,
            });
        }
        if self.max_iterations == 0 || self.window == 0 || self.memory == 0 {
            return Err(Error::Config(
                "iterations, window and memory must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Last iteration index (exclusive) that may innovate when the run goes
    /// the full budget.
    fn innovation_end(&self) -> usize {
        ((self.max_iterations as f64) * (1.0 - self.innovation_off_fraction)).ceil() as usize
    }

    /// Tail length making the tail `innovation_off_fraction` of a run whose
    /// innovation phase lasted `done` iterations.
    fn tail_len(&self, done: usize) -> usize {
        let f = self.innovation_off_fraction;
        let tail = (done as f64 * f / (1.0 - f)).ceil() as usize;
        tail.max(self.window).min(self.max_iterations.saturating_sub(done))
    }
}

/// Draws a plan index with logit probabilities over plan scores.
pub fn select_plan(agent: &Agent, scale: f64, rng: &mut impl Rng) -> Result<usize> {
    let probs = selection_probabilities(agent, scale)?;
    let mut u: f64 = rng.gen();
    for (i, p) in probs.iter().enumerate() {
        u -= p;
        if u < 0.0 {
            return Ok(i);
        }
    }
    Ok(probs.len() - 1)
}

/// Closed-form logit probabilities of the agent's plans.
pub fn selection_probabilities(agent: &Agent, scale: f64) -> Result<Vec<f64>> {
    let scores: Vec<f64> = agent
        .plans
        .iter()
        .map(|p| p.score.ok_or(Error::UnscoredPlan))
        .collect::<Result<_>>()?;
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = scores.iter().map(|s| (scale * (s - max)).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutator {
    DepartureTime,
    Route,
    Mode,
}

/// Routing inputs for new or changed plans.
pub struct RoutingContext<'a> {
    pub network: &'a Network,
    pub scoring: &'a ScoringConfig,
    pub times: &'a TravelTimes,
    pub tolls: &'a TollSchedule,
}

/// Routes every private vehicle trip of `plan` and clears the routes of
/// other trips.
pub fn route_plan(plan: &mut Plan, ctx: &RoutingContext) -> Result<()> {
    for i in 0..plan.trips.len() {
        let mode = plan.trips[i].mode;
        plan.trips[i].route = if mode.is_private_vehicle() {
            route(
                ctx.network,
                ctx.times,
                ctx.tolls,
                &ctx.scoring.cost_params(mode),
                plan.origin(i),
                plan.destination(i),
                plan.departure_time(i),
            )?
        } else {
            Vec::new()
        };
    }
    Ok(())
}

/// Copies the selected plan, applies `mutator`, appends the result and
/// selects it. Returns false, leaving the agent unchanged, when the
/// mutator has nothing to change.
pub fn mutate(
    agent: &mut Agent,
    mutator: Mutator,
    config: &ReplanningConfig,
    ctx: &RoutingContext,
    rng: &mut impl Rng,
) -> Result<bool> {
    let mut plan = agent.selected_plan().clone();
    plan.score = None;
    match mutator {
        Mutator::DepartureTime => {
            let range = i64::from(config.departure_time_range);
            let mut prev = 0i64;
            for a in plan.activities.iter_mut() {
                if let Some(end) = a.end_time {
                    let shifted = (i64::from(end) + rng.gen_range(-range..=range)).max(prev);
                    a.end_time = Some(shifted as u32);
                    prev = shifted;
                }
            }
        }
        Mutator::Route => {
            if !plan.trips.iter().any(|t| t.mode.is_private_vehicle()) {
                return Ok(false);
            }
        }
        Mutator::Mode => {
            let current = plan.main_mode();
            let options: Vec<Mode> = agent.modes.iter().filter(|m| Some(*m) != current).collect();
            if options.is_empty() {
                return Ok(false);
            }
            let mode = options[rng.gen_range(0..options.len())];
            for t in plan.trips.iter_mut() {
                t.mode = mode;
            }
        }
    }
    match route_plan(&mut plan, ctx) {
        Ok(()) => {}
        Err(Error::Unreachable { .. }) => return Ok(false),
        Err(e) => return Err(e),
    }
    add_plan(agent, plan, config.memory);
    Ok(true)
}

/// Appends `plan`, selects it, and evicts the worst-scored other plan
/// while the memory is over capacity.
pub fn add_plan(agent: &mut Agent, plan: Plan, memory: usize) {
    agent.plans.push(plan);
    while agent.plans.len() > memory.max(1) {
        let newest = agent.plans.len() - 1;
        let worst = (0..newest)
            .min_by(|&a, &b| {
                let sa = agent.plans[a].score.unwrap_or(f64::NEG_INFINITY);
                let sb = agent.plans[b].score.unwrap_or(f64::NEG_INFINITY);
                sa.total_cmp(&sb)
            })
            .expect("memory holds at least one older plan");
        agent.plans.remove(worst);
    }
    agent.selected = agent.plans.len() - 1;
}

/// Summary of one iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub mean_executed_score: f64,
    pub mean_best_score: f64,
    /// Shares of executed trips, in [`Mode::ALL`] order.
    pub mode_shares: [f64; 5],
    pub innovation: bool,
}

/// State reached by [`run_to_equilibrium`].
#[derive(Clone, Debug)]
pub struct RelaxedState {
    /// Agents with their plan sets; each selected plan carries its
    /// executed score of the returned iteration.
    pub agents: Vec<Agent>,
    pub log: EventLog,
    pub history: Vec<IterationStats>,
    pub converged: bool,
    /// Iterations simulated.
    pub iterations: usize,
    /// Iteration whose plans and events are returned.
    pub returned_iteration: usize,
}

impl RelaxedState {
    pub fn executed_scores(&self) -> Vec<f64> {
        self.agents
            .iter()
            .map(|a| a.selected_plan().score.expect("executed plans are scored"))
            .collect()
    }

    pub fn mean_score(&self) -> f64 {
        let s = self.executed_scores();
        s.iter().sum::<f64>() / s.len() as f64
    }
}

pub fn write_history_csv<W: Write>(w: W, history: &[IterationStats]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec![
        "iteration".to_string(),
        "mean_executed_score".into(),
        "mean_best_score".into(),
    ];
    header.extend(Mode::ALL.iter().map(|m| format!("share_{}", m.as_str())));
    header.push("innovation".into());
    out.write_record(&header)?;
    for h in history {
        let mut row = vec![
            h.iteration.to_string(),
            format!("{:.6}", h.mean_executed_score),
            format!("{:.6}", h.mean_best_score),
        ];
        row.extend(h.mode_shares.iter().map(|s| format!("{s:.6}")));
        row.push(h.innovation.to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Relative spread `(max - min) / |mean|` of the last `window` values.
fn window_spread(values: &[f64], window: usize) -> Option<f64> {
    if values.len() < window {
        return None;
    }
    let w = &values[values.len() - window..];
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = w.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    Some(if mean == 0.0 {
        if max == min {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (max - min) / mean.abs()
    })
}

fn stream_index(iteration: usize, agent: usize) -> u64 {
    ((iteration as u64) << 24) | agent as u64
}

/// Iterates replanning, simulation and scoring under a fixed toll
/// schedule.
///
/// Innovation runs for at least `min_iterations` and at most the first
/// `1 - innovation_off_fraction` of the budget; it stops early once the
/// mean executed score is stable over the window. A selection-only tail
/// follows whose length keeps the configured fraction. The run converges
/// when the tail's final window is stable. Without convergence the best
/// tail iteration is returned.
pub fn run_to_equilibrium(
    scenario: &Scenario,
    tolls: &TollSchedule,
    config: &ReplanningConfig,
    seed: u64,
) -> Result<RelaxedState> {
    config.validate()?;
    scenario.validate()?;
    tolls.validate()?;
    let network = &scenario.network;
    let horizon = scenario.mobsim.horizon;
    let estimate = scenario.fleet.as_ref().map(|_| FreeFlowTable::new(network));

    let mut agents = scenario.agents.clone();
    let mut times = TravelTimes::free_flow(network, horizon);
    {
        let ctx = RoutingContext {
            network,
            scoring: &scenario.scoring,
            times: &times,
            tolls,
        };
        for a in agents.iter_mut() {
            for p in a.plans.iter_mut() {
                if !p.is_routed(network) {
                    route_plan(p, &ctx)?;
                }
            }
        }
    }

    let can_innovate = config.innovation_weight() > 0.0;
    let mut history: Vec<IterationStats> = Vec::new();
    let mut tail: Option<(usize, usize)> = None;
    let mut best_tail: Option<(f64, usize, Vec<Agent>, EventLog)> = None;
    let mut iteration = 0;

    loop {
        let innovation = tail.is_none() && iteration > 0 && can_innovate;
        if iteration > 0 {
            let ctx = RoutingContext {
                network,
                scoring: &scenario.scoring,
                times: &times,
                tolls,
            };
            agents
                .par_iter_mut()
                .enumerate()
                .map(|(i, agent)| {
                    let mut rng = substream(seed, Stream::Selection, stream_index(iteration, i));
                    let r: f64 = rng.gen();
                    if innovation && r >= config.selection_weight {
                        let mut mrng = substream(seed, Stream::Mutation, stream_index(iteration, i));
                        let x = r - config.selection_weight;
                        let mutator = if x < config.departure_time_weight {
                            Mutator::DepartureTime
                        } else if x < config.departure_time_weight + config.route_weight {
                            Mutator::Route
                        } else {
                            Mutator::Mode
                        };
                        if mutate(agent, mutator, config, &ctx, &mut mrng)? {
                            return Ok(());
                        }
                    }
                    agent.selected = select_plan(agent, config.logit_scale, &mut rng)?;
                    Ok(())
                })
                .collect::<Result<()>>()?;
        }

        let fleet = match (&scenario.fleet, &estimate) {
            (Some(f), Some(est)) => Some(Fleet {
                placements: &f.placements,
                tariff: f.tariff,
                estimate: est,
            }),
            _ => None,
        };
        let log = simulate_day(&DayInput {
            network,
            agents: &agents,
            tolls,
            fleet,
            travel_times: &times,
            config: &scenario.mobsim,
        })?;
        let days = executed_days(&log, network, agents.len());
        agents.par_iter_mut().zip(days.par_iter()).for_each(|(a, d)| {
            let s = score_plan(a.selected_plan(), d, &scenario.scoring);
            a.selected_plan_mut().score = Some(s);
        });
        let stats = iteration_stats(iteration, &agents, &days, innovation);
        let mean = stats.mean_executed_score;
        history.push(stats);
        times = travel_times(&log, network);
        iteration += 1;

        let fixed_point = !can_innovate && agents.iter().all(|a| a.plans.len() == 1);
        if fixed_point {
            return Ok(finish(agents, log, history, true, iteration));
        }

        let executed: Vec<f64> = history.iter().map(|h| h.mean_executed_score).collect();
        match tail {
            None => {
                let stable = iteration >= config.min_iterations
                    && window_spread(&executed, config.window).is_some_and(|s| s <= config.tolerance);
                if stable || iteration >= config.innovation_end() {
                    let len = config.tail_len(iteration);
                    if len == 0 {
                        let converged = window_spread(&executed, config.window).is_some_and(|s| s <= config.tolerance);
                        return Ok(finish(agents, log, history, converged, iteration));
                    }
                    tail = Some((iteration, len));
                }
            }
            Some((start, len)) => {
                if best_tail.as_ref().is_none_or(|b| mean > b.0) {
                    best_tail = Some((mean, iteration - 1, agents.clone(), log.clone()));
                }
                let in_tail = iteration - start;
                let tail_values = &executed[start..];
                if in_tail >= len {
                    let stable = window_spread(tail_values, config.window.min(len)).is_some_and(|s| s <= config.tolerance);
                    if stable {
                        return Ok(finish(agents, log, history, true, iteration));
                    }
                    if iteration >= config.max_iterations {
                        let (_, at, agents, log) = best_tail.expect("tail ran at least once");
                        let mut state = finish(agents, log, history, false, iteration);
                        state.returned_iteration = at;
                        return Ok(state);
                    }
                }
            }
        }
    }
}

fn finish(agents: Vec<Agent>, log: EventLog, history: Vec<IterationStats>, converged: bool, iterations: usize) -> RelaxedState {
    RelaxedState {
        agents,
        log,
        history,
        converged,
        iterations,
        returned_iteration: iterations - 1,
    }
}

fn iteration_stats(
    iteration: usize,
    agents: &[Agent],
    days: &[crate::mobsim::ExecutedDay],
    innovation: bool,
) -> IterationStats {
    let n = agents.len() as f64;
    let executed = agents.iter().map(|a| a.selected_plan().score.unwrap_or(0.0)).sum::<f64>() / n;
    let best = agents.iter().map(|a| a.best_score().unwrap_or(0.0)).sum::<f64>() / n;
    let mut counts = [0usize; 5];
    for d in days {
        for t in &d.trips {
            let k = Mode::ALL.iter().position(|m| *m == t.mode).expect("known mode");
            counts[k] += 1;
        }
    }
    let total = counts.iter().sum::<usize>().max(1) as f64;
    IterationStats {
        iteration,
        mean_executed_score: executed,
        mean_best_score: best,
        mode_shares: counts.map(|c| c as f64 / total),
        innovation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::{Activity, ActivityKind, AgentId, ModeSet, Trip, HOUR};
    use crate::fixtures;
    use crate::mobsim::MobsimConfig;
    use crate::network::LinkId;

    fn agent_with_scores(scores: &[f64]) -> Agent {
        let plan = |s: f64| Plan {
            activities: vec![],
            trips: vec![],
            score: Some(s),
        };
        let mut a = Agent::new(AgentId(0), "a", ModeSet::new(&[Mode::Car]), plan(scores[0]));
        for &s in &scores[1..] {
            a.plans.push(plan(s));
        }
        a
    }

    #[test]
    fn logit_probabilities() {
        let a = agent_with_scores(&[1.0, 0.0]);
        let p = selection_probabilities(&a, 1.0).unwrap();
        assert!((p[0] / p[1] - std::f64::consts::E).abs() < 1e-12);
        // large scores do not overflow
        let big = agent_with_scores(&[1000.0, 999.0]);
        let q = selection_probabilities(&big, 1.0).unwrap();
        assert!((q[0] - p[0]).abs() < 1e-12);

        let single = agent_with_scores(&[-5.0]);
        let mut rng = substream(1, Stream::Selection, 0);
        for _ in 0..10 {
            assert_eq!(select_plan(&single, 1.0, &mut rng).unwrap(), 0);
        }
        let mut unscored = agent_with_scores(&[1.0, 2.0]);
        unscored.plans[1].score = None;
        assert!(matches!(select_plan(&unscored, 1.0, &mut rng), Err(Error::UnscoredPlan)));
    }

    #[test]
    fn equal_scores_split_evenly() {
        let a = agent_with_scores(&[3.0, 3.0]);
        let mut rng = substream(2, Stream::Selection, 0);
        let n = 10_000;
        let first = (0..n).filter(|_| select_plan(&a, 1.0, &mut rng).unwrap() == 0).count();
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((first as f64 - n as f64 / 2.0).abs() < 3.0 * sigma, "{first}");
    }

    fn diamond_agent(modes: &[Mode], mode: Mode) -> (Scenario, Agent) {
        let fx = fixtures::diamond();
        let home = fx.network.link_by_name("home").unwrap();
        let work = fx.network.link_by_name("work").unwrap();
        let act = |kind, link, end_time| Activity { kind, link, end_time };
        let plan = Plan {
            activities: vec![
                act(ActivityKind::Home, home, Some(8 * HOUR)),
                act(ActivityKind::Work, work, Some(17 * HOUR)),
                act(ActivityKind::Home, home, None),
            ],
            trips: vec![
                Trip { mode, route: vec![] },
                Trip { mode, route: vec![] },
            ],
            score: None,
        };
        let agent = Agent::new(AgentId(0), "a", ModeSet::new(modes), plan);
        let scenario = Scenario {
            network: fx.network,
            agents: vec![agent.clone()],
            fleet: None,
            scoring: ScoringConfig::vtts_target(),
            mobsim: MobsimConfig::default(),
        };
        (scenario, agent)
    }

    #[test]
    fn mutators() {
        let (sc, mut agent) = diamond_agent(&[Mode::Car, Mode::Pt], Mode::Car);
        let times = TravelTimes::free_flow(&sc.network, sc.mobsim.horizon);
        let tolls = TollSchedule::default();
        let ctx = RoutingContext {
            network: &sc.network,
            scoring: &sc.scoring,
            times: &times,
            tolls: &tolls,
        };
        route_plan(&mut agent.plans[0], &ctx).unwrap();
        agent.plans[0].score = Some(1.0);
        let config = ReplanningConfig::default();
        let mut rng = substream(3, Stream::Mutation, 0);
        for _ in 0..50 {
            let mut a = agent.clone();
            assert!(mutate(&mut a, Mutator::DepartureTime, &config, &ctx, &mut rng).unwrap());
            assert_eq!(a.plans.len(), 2);
            assert_eq!(a.selected, 1);
            let new = &a.plans[1];
            new.validate_structure().unwrap();
            for (old, new) in agent.plans[0].activities.iter().zip(&new.activities) {
                if let (Some(o), Some(n)) = (old.end_time, new.end_time) {
                    assert!((i64::from(o) - i64::from(n)).abs() <= 1800);
                }
            }
        }
        let mut a = agent.clone();
        assert!(mutate(&mut a, Mutator::Mode, &config, &ctx, &mut rng).unwrap());
        assert!(a.selected_plan().trips.iter().all(|t| t.mode == Mode::Pt && t.route.is_empty()));

        let (_, mut car_only) = diamond_agent(&[Mode::Car], Mode::Car);
        car_only.plans[0].score = Some(0.0);
        assert!(!mutate(&mut car_only, Mutator::Mode, &config, &ctx, &mut rng).unwrap());
        assert_eq!(car_only.plans.len(), 1);
    }

    #[test]
    fn eviction_drops_the_worst_older_plan() {
        let mut a = agent_with_scores(&[4.0, -2.0, 7.0, 1.0, 0.5]);
        let mut p = a.plans[0].clone();
        p.score = None;
        add_plan(&mut a, p, 5);
        assert_eq!(a.plans.len(), 5);
        let kept: Vec<Option<f64>> = a.plans.iter().map(|p| p.score).collect();
        assert_eq!(kept, vec![Some(4.0), Some(7.0), Some(1.0), Some(0.5), None]);
        assert_eq!(a.selected, 4);
    }

    #[test]
    fn single_plan_without_innovation_is_a_fixed_point() {
        let (sc, _) = diamond_agent(&[Mode::Car], Mode::Car);
        let config = ReplanningConfig {
            selection_weight: 1.0,
            departure_time_weight: 0.0,
            route_weight: 0.0,
            mode_weight: 0.0,
            ..ReplanningConfig::default()
        };
        let s = run_to_equilibrium(&sc, &TollSchedule::default(), &config, 5).unwrap();
        assert!(s.converged);
        assert_eq!(s.iterations, 1);
        assert_eq!(s.history.len(), 1);
        // fastest branch at free flow
        let route = &s.agents[0].selected_plan().trips[0].route;
        let names: Vec<&str> = route.iter().map(|l| sc.network.link(*l).name.as_str()).collect();
        assert_eq!(names, ["ab", "bd", "work"]);
        let again = run_to_equilibrium(&sc, &TollSchedule::default(), &config, 5).unwrap();
        assert_eq!(again.history, s.history);
        assert!(s.mean_score().is_finite());
        let _ = LinkId(0);
    }

    #[test]
    fn short_run_is_reproducible_and_keeps_the_tail_fraction() {
        let (mut sc, agent) = diamond_agent(&[Mode::Car, Mode::Pt, Mode::WalkBike], Mode::Car);
        sc.agents = (0..20)
            .map(|i| {
                let mut a = agent.clone();
                a.id = AgentId(i);
                a
            })
            .collect();
        let config = ReplanningConfig {
            max_iterations: 20,
            min_iterations: 5,
            window: 4,
            ..ReplanningConfig::default()
        };
        let a = run_to_equilibrium(&sc, &TollSchedule::default(), &config, 11).unwrap();
        let b = run_to_equilibrium(&sc, &TollSchedule::default(), &config, 11).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.log, b.log);
        assert!(a.iterations <= 20);
        let tail = a.history.iter().filter(|h| !h.innovation).count() - 1;
        assert!(tail as f64 >= 0.2 * (a.iterations as f64) - 1.0, "{tail} of {}", a.iterations);
        let mut csv = Vec::new();
        write_history_csv(&mut csv, &a.history).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("iteration,mean_executed_score,mean_best_score,share_car,"));
        assert_eq!(text.lines().count(), a.history.len() + 1);
    }
}
