use std::fs::{self, File};
use std::io::BufReader;

use tollsim::demand::{generate_scenario, write_population, Preset};
use tollsim::experiment::{compare_runs, read_run, run_experiment, write_run};
use tollsim::fixtures;
use tollsim::mobsim::{link_balances, measure_flows, MEASUREMENT_INTERVAL};
use tollsim::network::{average_speed, write_network, METERS_PER_KM, SECONDS_PER_HOUR};
use tollsim::pricing::{logged_charges, recompute_charges, SchemeKind, TollSchedule};
use tollsim::replanning::ReplanningConfig;
use tollsim::scenario::ScenarioConfig;

fn short(mut c: ScenarioConfig) -> ScenarioConfig {
    c.replanning = ReplanningConfig {
        max_iterations: 12,
        min_iterations: 4,
        window: 3,
        ..ReplanningConfig::default()
    };
    c.outer.max_outer_iterations = 3;
    c
}

#[test]
fn measured_speeds_never_exceed_free_speed() {
    for (fixture, scale) in [("corridor", 0.2), ("grid", 0.05)] {
        let mut c = short(ScenarioConfig::default());
        c.network.fixture = Some(fixture.into());
        c.network.capacity_scale = scale;
        c.population.n_agents = Some(300);
        let e = run_experiment(&c, None).unwrap();
        let net = &e.scenario.network;
        let series = measure_flows(&e.state.log, net, MEASUREMENT_INTERVAL);
        let balances = link_balances(&e.state.log, net);
        for l in net.link_ids() {
            let link = net.link(l);
            let obs = series.link(l);
            let entered: u32 = obs.iter().map(|o| o.users).sum();
            assert_eq!(entered, balances[l.index()].entries, "{fixture} {}", link.name);
            for o in obs.iter().filter(|o| o.density > 0.0) {
                let raw = o.outflow / o.density * METERS_PER_KM / SECONDS_PER_HOUR;
                assert!(raw <= link.free_speed * (1.0 + 1e-9), "{fixture} {} at {}: {raw}", link.name, o.start);
                assert!(average_speed(o, link).unwrap() <= link.free_speed);
            }
        }
    }
}

#[test]
fn stored_runs_replay() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = short(ScenarioConfig::default());
    c.network.fixture = Some("diamond".into());
    c.network.capacity_scale = 0.3;
    c.population.preset = Some(Preset::SavOriented);
    c.population.n_agents = Some(120);
    c.scheme.kind = SchemeKind::Distance;
    c.scheme.fare = Some(0.2);
    let e = run_experiment(&c, None).unwrap();
    write_run(dir.path(), &e).unwrap();

    let stored = read_run(dir.path()).unwrap();
    assert_eq!(stored.summary.scheme, SchemeKind::Distance);
    assert_eq!(stored.state.log, e.state.log);
    let text = BufReader::new(File::open(dir.path().join("schedule.txt")).unwrap());
    let schedule = TollSchedule::read_text(text, &stored.scenario.network).unwrap();
    assert_eq!(schedule, e.schedule);
    let n = stored.state.agents.len();
    let logged = logged_charges(&stored.state.log, n);
    assert!(logged.iter().sum::<i64>() > 0);
    assert_eq!(recompute_charges(&stored.state.log, &stored.scenario.network, &schedule, n).unwrap(), logged);

    let baseline = read_run(&dir.path().join("baseline")).unwrap();
    let report = compare_runs(&baseline, &stored).unwrap();
    let fresh = e.welfare.as_ref().unwrap();
    assert_eq!(report.welfare_change_cents, fresh.welfare_change_cents);
    assert_eq!(report.revenue_cents, report.welfare_change_cents - report.consumer_surplus_change_cents);

    // rerunning the stored configuration reproduces the events
    let again = run_experiment(&stored.config, None).unwrap();
    assert_eq!(again.state.log, e.state.log);
}

#[test]
fn scenarios_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures::corridor();
    write_network(&f.network, File::create(dir.path().join("net.csv")).unwrap()).unwrap();
    let g = generate_scenario(Preset::AvOriented, 40, 3, &f.network, &f.locations).unwrap();
    write_population(File::create(dir.path().join("pop.jsonl")).unwrap(), &g.agents, &f.network).unwrap();
    let toml = "seed = 3\n\n[network]\nfile = \"net.csv\"\n\n[population]\nfile = \"pop.jsonl\"\n\n[replanning]\nmax_iterations = 6\nmin_iterations = 2\nwindow = 2\n";
    fs::write(dir.path().join("run.toml"), toml).unwrap();

    let c = ScenarioConfig::load(&dir.path().join("run.toml")).unwrap();
    c.validate().unwrap();
    let scenario = c.build().unwrap();
    assert_eq!(scenario.network.n_links(), f.network.n_links());
    assert_eq!(scenario.agents, g.agents);
    // SAV users without a fleet
    assert!(run_experiment(&c, None).is_err());
    let with_fleet = format!("{toml}\n[fleet]\nsize = 4\ntariff = {{ flat = 0.5, per_mile = 0.2, per_minute = 0.05 }}\n");
    fs::write(dir.path().join("run.toml"), with_fleet).unwrap();
    let c = ScenarioConfig::load(&dir.path().join("run.toml")).unwrap();
    let e = run_experiment(&c, None).unwrap();
    assert_eq!(e.scenario.fleet.as_ref().map(|f| f.placements.len()), Some(4));
    assert!(e.state.iterations <= 6);
    assert!(e.welfare.is_none());

    fs::write(dir.path().join("bad.toml"), "[population]\nfile = \"missing.jsonl\"\n").unwrap();
    let bad = ScenarioConfig::load(&dir.path().join("bad.toml")).unwrap();
    assert!(bad.build().is_err());
}
