use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use tollsim::demand::Preset;
use tollsim::experiment::{compare_runs, read_run, run_experiment, run_sweep, write_run, write_sweep, write_welfare};
use tollsim::pricing::SchemeKind;
use tollsim::scenario::ScenarioConfig;

/// Agent-based traffic simulation with congestion pricing.
#[derive(Parser)]
#[command(name = "tollsim", version)]
struct Cli {
    /// Root directory for run output.
    #[arg(long, global = true, env = "TOLLSIM_OUTPUT", default_value = "runs")]
    output_root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Relax a scenario to equilibrium, with or without tolls.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Fare in dollars per link entry (facility) or per mile (distance).
        #[arg(long)]
        fare: Option<f64>,
        /// Stored toll-free run to compare against instead of a fresh one.
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
    /// Run a traditional scheme at several fare levels.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated fare levels, dollars.
        #[arg(long, value_delimiter = ',')]
        fares: Option<Vec<f64>>,
    },
    /// Compare two stored runs.
    Report {
        baseline: PathBuf,
        tolled: PathBuf,
        /// Where to write welfare.csv and welfare.txt; defaults to the tolled run.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration file.
    Validate { config: PathBuf },
}

#[derive(Args)]
struct ScenarioArgs {
    /// TOML configuration; the flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    fixture: Option<String>,
    /// Population preset: base, av-oriented or sav-oriented.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    agents: Option<usize>,
    /// none, facility, distance, mcp or travel_time.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    capacity_scale: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Run directory; relative paths are placed under the output root.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Internal(anyhow::Error),
}

impl From<tollsim::Error> for Failure {
    fn from(e: tollsim::Error) -> Self {
        use tollsim::Error as E;
        match e {
            E::Io(_) => Failure::Internal(e.into()),
            _ => Failure::Usage(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

fn usage(msg: String) -> Failure {
    Failure::Usage(anyhow::anyhow!(msg))
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig, Failure> {
        let mut c = match &self.config {
            Some(path) => {
                if !path.is_file() {
                    return Err(usage(format!("config file {} not found", path.display())));
                }
                ScenarioConfig::load(path)?
            }
            None => ScenarioConfig::default(),
        };
        if let Some(f) = &self.fixture {
            c.network.fixture = Some(f.clone());
            c.network.file = None;
        }
        if let Some(p) = &self.preset {
            c.population.preset = Some(Preset::parse(p)?);
        }
        if let Some(n) = self.agents {
            c.population.n_agents = Some(n);
            c.population.file = None;
        }
        if let Some(s) = &self.scheme {
            c.scheme.kind = SchemeKind::parse(s)?;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(x) = self.capacity_scale {
            c.network.capacity_scale = x;
        }
        if let Some(n) = self.max_iterations {
            c.replanning.max_iterations = n;
        }
        if let Some(o) = &self.out {
            c.output = Some(o.clone());
        }
        Ok(c)
    }
}

fn run_dir(root: &Path, config: &ScenarioConfig, default_name: String) -> PathBuf {
    match &config.output {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => root.join(p),
        None => root.join(default_name),
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            scenario,
            fare,
            baseline,
        } => {
            let mut config = scenario.resolve()?;
            if fare.is_some() {
                config.scheme.fare = fare;
            }
            config.validate()?;
            let stored = match &baseline {
                Some(dir) => {
                    let b = read_run(dir)?;
                    if b.summary.seed != config.seed {
                        return Err(usage(format!(
                            "baseline seed {} differs from seed {}",
                            b.summary.seed, config.seed
                        )));
                    }
                    if b.summary.scheme != SchemeKind::None {
                        return Err(usage(format!("{} is not a toll-free run", dir.display())));
                    }
                    Some(b.state)
                }
                None => None,
            };
            let dir = run_dir(
                &cli.output_root,
                &config,
                format!("{}-seed{}", config.scheme.kind.as_str(), config.seed),
            );
            let experiment = run_experiment(&config, stored)?;
            let summary = write_run(&dir, &experiment).with_context(|| format!("writing {}", dir.display()))?;
            println!("run directory: {}", dir.display());
            println!(
                "iterations {} (returned {}), converged: {}",
                summary.iterations, summary.returned_iteration, summary.converged
            );
            if let Some(c) = summary.outer_converged {
                println!("outer loop converged: {c}");
            }
            println!(
                "VMT {:.1}, delay {:.2} veh-h, revenue ${:.2}",
                summary.metrics.vmt,
                summary.metrics.total_delay,
                summary.revenue_cents as f64 / 100.0
            );
            if let Some(w) = &experiment.welfare {
                println!("{}", w.summary());
            }
            Ok(())
        }
        Command::Sweep { scenario, fares } => {
            let mut config = scenario.resolve()?;
            if let Some(f) = fares {
                config.scheme.fares = f;
            }
            if !config.scheme.kind.is_traditional() {
                return Err(usage(format!(
                    "sweep needs the facility or distance scheme, not {}",
                    config.scheme.kind.as_str()
                )));
            }
            config.scheme.fare = config.scheme.fares.first().copied();
            config.validate()?;
            let dir = run_dir(
                &cli.output_root,
                &config,
                format!("sweep-{}-seed{}", config.scheme.kind.as_str(), config.seed),
            );
            let sweep = run_sweep(&config)?;
            write_sweep(&dir, &sweep).with_context(|| format!("writing {}", dir.display()))?;
            print!("{}", sweep.table.render());
            match sweep.table.best {
                Some(i) => println!("best fare: {:.2}", sweep.table.cells[i].fare),
                None => println!("no converged fare level"),
            }
            println!("sweep directory: {}", dir.display());
            Ok(())
        }
        Command::Report { baseline, tolled, out } => {
            let b = read_run(&baseline)?;
            let t = read_run(&tolled)?;
            let report = compare_runs(&b, &t)?;
            let out = out.unwrap_or(tolled);
            write_welfare(&out, &report).with_context(|| format!("writing {}", out.display()))?;
            println!("{}", report.summary());
            Ok(())
        }
        Command::Validate { config } => {
            if !config.is_file() {
                return Err(usage(format!("config file {} not found", config.display())));
            }
            let c = ScenarioConfig::load(&config)?;
            c.validate()?;
            println!("{}: ok", config.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(1)
        }
    }
}
