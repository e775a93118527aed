//! Complete runs of a configured experiment and their run directories.
//!
//! A run directory holds:
//!
//! | file | content |
//! |---|---|
//! | `config.toml` | resolved configuration; rerunning it reproduces the directory |
//! | `events.jsonl` | event log of the returned iteration |
//! | `plans.jsonl` | executed plan of every agent |
//! | `scores.csv` | executed score of every agent |
//! | `history.csv` | per-iteration score and mode-share history |
//! | `schedule.txt` | toll schedule in force |
//! | `summary.json` | convergence flags, revenue and traffic metrics |
//! | `outer_trace.csv` | outer-loop trace (marginal-cost and travel-time schemes) |
//! | `welfare.csv`, `welfare.txt` | comparison with the toll-free baseline (tolled runs) |
//! | `baseline/` | the toll-free baseline, itself a run directory (tolled runs) |

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytics::{
    facility_links, sweep_report, traffic_metrics, traditional_schedule, welfare_change, SweepTable, TrafficMetrics,
    WelfareReport,
};
use crate::demand::read_population;
use crate::demand::write_population;
use crate::error::{Error, Result};
use crate::mobsim::EventLog;
use crate::pricing::{converge_tolls_from, OuterStep, SchemeKind, TollSchedule};
use crate::replanning::{run_to_equilibrium, write_history_csv, IterationStats, RelaxedState};
use crate::scenario::{Scenario, ScenarioConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub n_agents: usize,
    pub scheme: SchemeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fare: Option<f64>,
    /// Inner equilibrium reached.
    pub converged: bool,
    /// Outer loop settled; only for marginal-cost and travel-time schemes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_converged: Option<bool>,
    pub iterations: usize,
    pub returned_iteration: usize,
    pub revenue_cents: i64,
    pub mean_score: f64,
    pub metrics: TrafficMetrics,
    pub history: Vec<IterationStats>,
}

/// Result of [`run_experiment`].
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ScenarioConfig,
    pub scenario: Scenario,
    pub schedule: TollSchedule,
    pub state: RelaxedState,
    /// Toll-free run with the same seed; absent for untolled runs.
    pub baseline: Option<RelaxedState>,
    pub outer_trace: Option<(Vec<OuterStep>, bool)>,
    pub welfare: Option<WelfareReport>,
}

/// Runs the configured scheme to equilibrium. Tolled runs are compared with
/// `baseline` when given, otherwise with a fresh toll-free run.
pub fn run_experiment(config: &ScenarioConfig, baseline: Option<RelaxedState>) -> Result<Experiment> {
    let scenario = config.build()?;
    let kind = config.scheme.kind;
    let seed = config.seed;
    if kind == SchemeKind::None {
        let state = run_to_equilibrium(&scenario, &TollSchedule::None, &config.replanning, seed)?;
        return Ok(Experiment {
            config: config.clone(),
            scenario,
            schedule: TollSchedule::None,
            state,
            baseline: None,
            outer_trace: None,
            welfare: None,
        });
    }
    let baseline = match baseline {
        Some(b) => {
            check_pairing(&scenario, &b)?;
            b
        }
        None => run_to_equilibrium(&scenario, &TollSchedule::None, &config.replanning, seed)?,
    };
    let (schedule, state, outer_trace, baseline) = if kind.is_advanced() {
        let c = converge_tolls_from(&scenario, kind, &config.outer, &config.replanning, seed, baseline)?;
        (c.schedule, c.state, Some((c.trace, c.converged)), c.baseline)
    } else {
        let fare = config.scheme.fare.expect("validated fare");
        let links = match kind {
            SchemeKind::Facility => facility_links(&baseline, &scenario.network)?,
            _ => BTreeSet::new(),
        };
        let schedule = traditional_schedule(kind, fare, &links)?;
        let state = run_to_equilibrium(&scenario, &schedule, &config.replanning, seed)?;
        (schedule, state, None, baseline)
    };
    let welfare = welfare_change(
        &baseline,
        &state,
        &scenario.network,
        scenario.scoring.beta_money,
        config.scoring.monetization,
    )?;
    Ok(Experiment {
        config: config.clone(),
        scenario,
        schedule,
        state,
        baseline: Some(baseline),
        outer_trace,
        welfare: Some(welfare),
    })
}

fn check_pairing(scenario: &Scenario, baseline: &RelaxedState) -> Result<()> {
    if scenario.agents.len() != baseline.agents.len()
        || scenario.agents.iter().zip(&baseline.agents).any(|(a, b)| a.name != b.name)
    {
        return Err(Error::PopulationMismatch(
            "stored baseline has a different population".into(),
        ));
    }
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_state(
    dir: &Path,
    config: &ScenarioConfig,
    scenario: &Scenario,
    schedule: &TollSchedule,
    state: &RelaxedState,
    outer_converged: Option<bool>,
) -> Result<RunSummary> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), config.to_toml()?)?;
    let network = &scenario.network;
    let mut w = create(dir, "events.jsonl")?;
    state.log.write_jsonl(&mut w)?;
    w.flush()?;
    let mut w = create(dir, "plans.jsonl")?;
    write_population(&mut w, &state.agents, network)?;
    w.flush()?;
    let mut scores = csv::Writer::from_writer(create(dir, "scores.csv")?);
    scores.write_record(["agent", "score"])?;
    for (a, s) in state.agents.iter().zip(state.executed_scores()) {
        scores.write_record([a.name.clone(), format!("{s:?}")])?;
    }
    scores.flush()?;
    write_history_csv(create(dir, "history.csv")?, &state.history)?;
    let mut w = create(dir, "schedule.txt")?;
    schedule.write_text(network, &mut w)?;
    w.flush()?;
    let summary = RunSummary {
        seed: config.seed,
        n_agents: state.agents.len(),
        scheme: config.scheme.kind,
        fare: config.scheme.fare,
        converged: state.converged,
        outer_converged,
        iterations: state.iterations,
        returned_iteration: state.returned_iteration,
        revenue_cents: state.log.toll_revenue_cents(),
        mean_score: state.mean_score(),
        metrics: traffic_metrics(&state.log, network),
        history: state.history.clone(),
    };
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// Writes `experiment` into `dir`, creating it if needed.
pub fn write_run(dir: &Path, experiment: &Experiment) -> Result<RunSummary> {
    let e = experiment;
    let outer_converged = e.outer_trace.as_ref().map(|(_, c)| *c);
    let summary = write_state(dir, &e.config, &e.scenario, &e.schedule, &e.state, outer_converged)?;
    if let Some((trace, converged)) = &e.outer_trace {
        write_outer_trace(create(dir, "outer_trace.csv")?, trace, *converged)?;
    }
    if let Some(b) = &e.baseline {
        let mut config = e.config.clone();
        config.scheme.kind = SchemeKind::None;
        config.scheme.fare = None;
        write_state(&dir.join("baseline"), &config, &e.scenario, &TollSchedule::None, b, None)?;
    }
    if let Some(report) = &e.welfare {
        write_welfare(dir, report)?;
    }
    Ok(summary)
}

pub fn write_welfare(dir: &Path, report: &WelfareReport) -> Result<()> {
    report.write_csv(create(dir, "welfare.csv")?)?;
    fs::write(dir.join("welfare.txt"), format!("{}\n", report.summary()))?;
    Ok(())
}

fn write_outer_trace<W: Write>(w: W, trace: &[OuterStep], converged: bool) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "k",
        "revenue_cents",
        "tolled_cells",
        "max_toll_cents",
        "travel_time_change_pct",
        "utility_change_pct",
        "welfare_change_cents",
        "mean_score",
        "inner_converged",
        "outer_converged",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    for s in trace {
        out.write_record([
            s.k.to_string(),
            s.revenue_cents.to_string(),
            s.tolled_cells.to_string(),
            s.max_toll_cents.to_string(),
            opt(s.travel_time_change.map(|c| c.value)),
            opt(s.utility_change),
            s.welfare_change_cents.to_string(),
            format!("{:.4}", s.mean_score),
            s.inner_converged.to_string(),
            converged.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Fare sweep of a traditional scheme against one toll-free baseline.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub config: ScenarioConfig,
    pub scenario: Scenario,
    pub baseline: RelaxedState,
    pub table: SweepTable,
}

/// Runs every fare of `config.scheme.fares` for the configured traditional
/// scheme.
pub fn run_sweep(config: &ScenarioConfig) -> Result<Sweep> {
    let kind = config.scheme.kind;
    if !kind.is_traditional() {
        return Err(Error::Config(format!("scheme {} has no scalar fare to sweep", kind.as_str())));
    }
    if config.scheme.fares.is_empty() {
        return Err(Error::Config("fare grid is empty".into()));
    }
    let mut probe = config.clone();
    probe.scheme.fare = Some(config.scheme.fares[0]);
    let scenario = probe.build()?;
    let baseline = run_to_equilibrium(&scenario, &TollSchedule::None, &config.replanning, config.seed)?;
    let table = sweep_report(&scenario, kind, &config.scheme.fares, &baseline, &config.replanning, config.seed)?;
    Ok(Sweep {
        config: config.clone(),
        scenario,
        baseline,
        table,
    })
}

/// Writes `sweep.csv`, `sweep.txt`, the baseline and one run directory per
/// fare (`fare_0.10`, ...).
pub fn write_sweep(dir: &Path, sweep: &Sweep) -> Result<()> {
    fs::create_dir_all(dir)?;
    sweep.table.write_csv(create(dir, "sweep.csv")?)?;
    fs::write(dir.join("sweep.txt"), sweep.table.render())?;
    let mut base = sweep.config.clone();
    base.scheme.kind = SchemeKind::None;
    base.scheme.fare = None;
    write_state(&dir.join("baseline"), &base, &sweep.scenario, &TollSchedule::None, &sweep.baseline, None)?;
    let links = match sweep.table.kind {
        SchemeKind::Facility => facility_links(&sweep.baseline, &sweep.scenario.network)?,
        _ => BTreeSet::new(),
    };
    for cell in &sweep.table.cells {
        let mut config = sweep.config.clone();
        config.scheme.fare = Some(cell.fare);
        let schedule = traditional_schedule(sweep.table.kind, cell.fare, &links)?;
        let cell_dir = dir.join(format!("fare_{:.2}", cell.fare));
        write_state(&cell_dir, &config, &sweep.scenario, &schedule, &cell.state, None)?;
        write_welfare(&cell_dir, &cell.report)?;
    }
    Ok(())
}

/// A run directory read back from disk.
#[derive(Clone, Debug)]
pub struct StoredRun {
    pub config: ScenarioConfig,
    pub summary: RunSummary,
    pub scenario: Scenario,
    pub state: RelaxedState,
}

fn open(dir: &Path, name: &str) -> Result<BufReader<File>> {
    let path = dir.join(name);
    File::open(&path).map(BufReader::new).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::Config(format!("run directory lacks {}", path.display()))
        } else {
            e.into()
        }
    })
}

/// Loads the executed plans, scores and event log of a run directory.
pub fn read_run(dir: &Path) -> Result<StoredRun> {
    let config = ScenarioConfig::load(&dir.join("config.toml")).map_err(|e| match e {
        Error::Io(_) => Error::Config(format!("run directory {} lacks config.toml", dir.display())),
        other => other,
    })?;
    let summary: RunSummary = serde_json::from_reader(open(dir, "summary.json")?)?;
    let scenario = config.build()?;
    let log = EventLog::read_jsonl(open(dir, "events.jsonl")?)?;
    let mut agents = read_population(open(dir, "plans.jsonl")?, &scenario.network)?;
    let mut scores = csv::Reader::from_reader(open(dir, "scores.csv")?);
    let mut n = 0;
    for (i, row) in scores.deserialize::<(String, f64)>().enumerate() {
        let (name, score) = row?;
        let agent = agents
            .get_mut(i)
            .filter(|a| a.name == name)
            .ok_or_else(|| Error::PopulationMismatch(format!("scores.csv row {} names `{name}`", i + 1)))?;
        agent.plans[0].score = Some(score);
        n += 1;
    }
    if n != agents.len() {
        return Err(Error::PopulationMismatch(format!(
            "{} plans but {n} scores",
            agents.len()
        )));
    }
    let state = RelaxedState {
        agents,
        log,
        history: summary.history.clone(),
        converged: summary.converged,
        iterations: summary.iterations,
        returned_iteration: summary.returned_iteration,
    };
    Ok(StoredRun {
        config,
        summary,
        scenario,
        state,
    })
}

/// Welfare comparison of two stored runs with the same seed and population.
pub fn compare_runs(baseline: &StoredRun, tolled: &StoredRun) -> Result<WelfareReport> {
    if baseline.summary.seed != tolled.summary.seed {
        return Err(Error::PopulationMismatch(format!(
            "seed {} vs seed {}",
            baseline.summary.seed, tolled.summary.seed
        )));
    }
    welfare_change(
        &baseline.state,
        &tolled.state,
        &tolled.scenario.network,
        tolled.scenario.scoring.beta_money,
        tolled.config.scoring.monetization,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: SchemeKind, fare: Option<f64>) -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        c.network.fixture = Some("corridor".into());
        c.population.n_agents = Some(30);
        c.replanning.max_iterations = 8;
        c.replanning.min_iterations = 4;
        c.replanning.window = 2;
        c.scheme.kind = kind;
        c.scheme.fare = fare;
        c
    }

    #[test]
    fn run_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let e = run_experiment(&small(SchemeKind::Distance, Some(0.2)), None).unwrap();
        write_run(dir.path(), &e).unwrap();
        for f in ["config.toml", "events.jsonl", "plans.jsonl", "scores.csv", "history.csv", "schedule.txt", "summary.json", "welfare.csv", "welfare.txt", "baseline/events.jsonl"] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        let tolled = read_run(dir.path()).unwrap();
        let base = read_run(&dir.path().join("baseline")).unwrap();
        assert_eq!(tolled.state.log, e.state.log);
        assert_eq!(tolled.state.executed_scores(), e.state.executed_scores());
        let report = compare_runs(&base, &tolled).unwrap();
        assert_eq!(&report, e.welfare.as_ref().unwrap());

        let same = compare_runs(&base, &base).unwrap();
        assert_eq!(same.consumer_surplus_change_cents, 0);
        assert_eq!(same.welfare_change_cents, 0);

        // replaying the stored configuration reproduces the events
        let replay = run_experiment(&tolled.config, None).unwrap();
        assert_eq!(replay.state.log, e.state.log);
    }

    #[test]
    fn sweep_directory() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(SchemeKind::Distance, None);
        c.scheme.fares = vec![0.1, 0.3];
        let sweep = run_sweep(&c).unwrap();
        write_sweep(dir.path(), &sweep).unwrap();
        let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert_eq!(text.lines().count(), 3);
        let cell = read_run(&dir.path().join("fare_0.30")).unwrap();
        let base = read_run(&dir.path().join("baseline")).unwrap();
        assert_eq!(compare_runs(&base, &cell).unwrap(), sweep.table.cells[1].report);

        c.scheme.kind = SchemeKind::Mcp;
        assert!(run_sweep(&c).is_err());
        c.scheme.kind = SchemeKind::Facility;
        c.scheme.fares.clear();
        assert!(run_sweep(&c).is_err());
    }

    #[test]
    fn missing_files_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        assert!(read_run(dir.path()).is_err());
        let e = run_experiment(&small(SchemeKind::None, None), None).unwrap();
        write_run(dir.path(), &e).unwrap();
        fs::remove_file(dir.path().join("events.jsonl")).unwrap();
        assert!(matches!(read_run(dir.path()), Err(Error::Config(_))));
    }
}
