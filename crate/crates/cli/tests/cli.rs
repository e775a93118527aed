use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tollsim(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tollsim"))
        .args(args)
        .env("TOLLSIM_OUTPUT", root)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn welfare_value(dir: &Path, metric: &str) -> f64 {
    let text = fs::read_to_string(dir.join("welfare.csv")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{metric},")))
        .unwrap_or_else(|| panic!("no {metric} in welfare.csv"))
        .parse()
        .unwrap()
}

const SMALL: [&str; 6] = ["--fixture", "corridor", "--agents", "40", "--max-iterations", "12"];

fn with<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    let mut v: Vec<&str> = Vec::new();
    v.extend_from_slice(extra);
    v.extend_from_slice(&SMALL);
    v
}

#[test]
fn baseline_run_is_reproducible() {
    let root = tempfile::tempdir().unwrap();
    let o = tollsim(root.path(), &with(&["run", "--preset", "base", "--scheme", "none", "--out", "a"]));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let a = root.path().join("a");
    for f in ["config.toml", "events.jsonl", "plans.jsonl", "scores.csv", "history.csv", "summary.json", "schedule.txt"] {
        assert!(a.join(f).is_file(), "{f}");
    }
    assert!(!a.join("welfare.csv").exists());

    // replay from the stored configuration alone
    let config = a.join("config.toml");
    let o = tollsim(root.path(), &["run", "--config", config.to_str().unwrap(), "--out", "b"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let events = |d: &str| fs::read(root.path().join(d).join("events.jsonl")).unwrap();
    assert_eq!(events("a"), events("b"));

    let summary = fs::read_to_string(a.join("summary.json")).unwrap();
    assert!(summary.contains("\"converged\""));
}

#[test]
fn tolled_run_against_stored_baseline() {
    let root = tempfile::tempdir().unwrap();
    assert_eq!(code(&tollsim(root.path(), &with(&["run", "--out", "base"]))), 0);
    let base = root.path().join("base");
    let o = tollsim(
        root.path(),
        &with(&["run", "--scheme", "distance", "--fare", "0.2", "--baseline", base.to_str().unwrap(), "--out", "dist"]),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dist = root.path().join("dist");
    let revenue = welfare_value(&dist, "revenue_dollars");
    let cs = welfare_value(&dist, "consumer_surplus_change_dollars");
    let welfare = welfare_value(&dist, "welfare_change_dollars");
    assert!(revenue > 0.0);
    assert!((welfare - (revenue + cs)).abs() < 0.005);

    // the report command reproduces the stored comparison
    let out = root.path().join("report");
    fs::create_dir_all(&out).unwrap();
    let o = tollsim(
        root.path(),
        &["report", base.to_str().unwrap(), dist.to_str().unwrap(), "--out", out.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read_to_string(out.join("welfare.csv")).unwrap(),
        fs::read_to_string(dist.join("welfare.csv")).unwrap()
    );

    // baseline against itself
    let o = tollsim(
        root.path(),
        &["report", base.to_str().unwrap(), base.to_str().unwrap(), "--out", out.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0);
    for m in ["revenue_dollars", "consumer_surplus_change_dollars", "welfare_change_dollars"] {
        assert_eq!(welfare_value(&out, m), 0.0);
    }

    // a baseline with another seed is refused
    let o = tollsim(
        root.path(),
        &with(&["run", "--scheme", "distance", "--fare", "0.2", "--seed", "9", "--baseline", base.to_str().unwrap()]),
    );
    assert_eq!(code(&o), 2);
    assert_eq!(code(&tollsim(root.path(), &with(&["run", "--seed", "9", "--out", "other"]))), 0);
    let other = root.path().join("other");
    let o = tollsim(root.path(), &["report", base.to_str().unwrap(), other.to_str().unwrap()]);
    assert_eq!(code(&o), 2);

    fs::remove_file(dist.join("events.jsonl")).unwrap();
    let o = tollsim(root.path(), &["report", base.to_str().unwrap(), dist.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn marginal_cost_run_on_the_grid() {
    let root = tempfile::tempdir().unwrap();
    let config = root.path().join("mcp.toml");
    fs::write(
        &config,
        "seed = 3\n\
         [network]\nfixture = \"grid\"\ncapacity_scale = 0.1\n\
         [population]\npreset = \"sav-oriented\"\nn_agents = 120\n\
         [scheme]\nkind = \"mcp\"\n\
         [replanning]\nmax_iterations = 12\nmin_iterations = 6\nwindow = 3\n\
         [outer]\nmax_outer_iterations = 3\n",
    )
    .unwrap();
    let o = tollsim(root.path(), &["run", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = root.path().join("mcp-seed3");
    let schedule = fs::read_to_string(dir.join("schedule.txt")).unwrap();
    assert!(schedule.starts_with("scheme = mcp"));
    let trace = fs::read_to_string(dir.join("outer_trace.csv")).unwrap();
    assert!(trace.lines().count() >= 3);
    assert!(dir.join("baseline/events.jsonl").is_file());
    let revenue = welfare_value(&dir, "revenue_dollars");
    let cs = welfare_value(&dir, "consumer_surplus_change_dollars");
    assert!((welfare_value(&dir, "welfare_change_dollars") - (revenue + cs)).abs() < 0.005);
}

#[test]
fn sweep_tables() {
    let root = tempfile::tempdir().unwrap();
    let o = tollsim(root.path(), &with(&["sweep", "--scheme", "facility", "--fares", "0.1,0.2,0.3", "--out", "s3"]));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(root.path().join("s3/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(csv.lines().skip(1).filter(|l| l.ends_with(",true")).count(), 1);
    assert!(root.path().join("s3/fare_0.20/welfare.csv").is_file());

    let o = tollsim(root.path(), &with(&["sweep", "--scheme", "distance", "--fares", "0.2", "--out", "s1"]));
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(root.path().join("s1/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);

    let o = tollsim(root.path(), &with(&["sweep", "--scheme", "mcp"]));
    assert_eq!(code(&o), 2);
    let empty = root.path().join("empty.toml");
    fs::write(&empty, "[scheme]\nkind = \"facility\"\nfares = []\n").unwrap();
    let o = tollsim(root.path(), &["sweep", "--config", empty.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn validate_and_usage_errors() {
    let root = tempfile::tempdir().unwrap();
    let good = root.path().join("good.toml");
    fs::write(&good, "seed = 4\n[population]\npreset = \"av-oriented\"\nn_agents = 100\n").unwrap();
    assert_eq!(code(&tollsim(root.path(), &["validate", good.to_str().unwrap()])), 0);

    for (name, text) in [
        ("unknown.toml", "speed = 3\n"),
        ("rate.toml", "[scoring]\ncar_cost_per_mile = -0.3\n"),
        ("fixture.toml", "[network]\nfixture = \"ring\"\n"),
        ("fare.toml", "[scheme]\nkind = \"distance\"\n"),
    ] {
        let p = root.path().join(name);
        fs::write(&p, text).unwrap();
        let o = tollsim(root.path(), &["validate", p.to_str().unwrap()]);
        assert_eq!(code(&o), 2, "{name}");
        assert!(!o.stderr.is_empty());
    }
    let missing = root.path().join("missing.toml");
    assert_eq!(code(&tollsim(root.path(), &["validate", missing.to_str().unwrap()])), 2);
    assert_eq!(code(&tollsim(root.path(), &["fly"])), 2);
    assert_eq!(code(&tollsim(root.path(), &["run", "--scheme", "cordon"])), 2);
    assert_eq!(code(&tollsim(root.path(), &["run", "--agents", "0"])), 2);
}
