//! Resolved simulation inputs.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::analytics::{Monetization, DEFAULT_FARE_GRID};
use crate::demand::{generate_scenario, read_population, Agent, Locations, Mode, Preset};
use crate::dispatch::Tariff;
use crate::error::{Error, Result};
use crate::fixtures::{self, FIXTURE_NAMES};
use crate::mobsim::MobsimConfig;
use crate::network::{read_network, LinkId, Network};
use crate::pricing::{OuterLoopConfig, SchemeKind};
use crate::replanning::ReplanningConfig;
use crate::rng::{substream, Stream};
use crate::scoring::ScoringConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct FleetSetup {
    /// Start link of each fleet vehicle.
    pub placements: Vec<LinkId>,
    pub tariff: Tariff,
}

/// Everything a run needs besides the toll schedule and the seed.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub network: Network,
    pub agents: Vec<Agent>,
    pub fleet: Option<FleetSetup>,
    pub scoring: ScoringConfig,
    pub mobsim: MobsimConfig,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.scoring.validate()?;
        self.mobsim.validate()?;
        if self.agents.is_empty() {
            return Err(Error::Config("scenario has no agents".into()));
        }
        for (i, a) in self.agents.iter().enumerate() {
            if a.id.index() != i {
                return Err(Error::Config(format!("agent `{}` has id {} at position {i}", a.name, a.id.0)));
            }
            for p in &a.plans {
                p.validate_structure()?;
                for act in &p.activities {
                    if act.link.index() >= self.network.n_links() {
                        return Err(Error::UnknownLink(act.link.to_string()));
                    }
                }
                for t in &p.trips {
                    if !a.modes.contains(t.mode) {
                        return Err(Error::Config(format!(
                            "agent `{}` uses unavailable mode {}",
                            a.name,
                            t.mode.as_str()
                        )));
                    }
                }
            }
        }
        if let Some(f) = &self.fleet {
            f.tariff.validate()?;
            if let Some(l) = f.placements.iter().find(|l| l.index() >= self.network.n_links()) {
                return Err(Error::UnknownLink(l.to_string()));
            }
        }
        Ok(())
    }
}

/// Where the network comes from: a shipped fixture or a network file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Multiplier on every link's flow and storage capacity. Set it to the
    /// population sample share when simulating a sample of the real demand.
    #[serde(default = "one")]
    pub capacity_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            fixture: Some("grid".into()),
            file: None,
            capacity_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSection {
    /// Generator preset; also sets the fleet size and tariff.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_agents: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for PopulationSection {
    fn default() -> Self {
        PopulationSection {
            preset: Some(Preset::Base),
            n_agents: Some(500),
            file: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringSection {
    pub preset: String,
    /// Full scoring parameters in a separate file; replaces the preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Dollars per mile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub car_cost_per_mile: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub av_cost_per_mile: Option<f64>,
    #[serde(default)]
    pub monetization: Monetization,
}

impl Default for ScoringSection {
    fn default() -> Self {
        ScoringSection {
            preset: "vtts-target".into(),
            file: None,
            car_cost_per_mile: None,
            av_cost_per_mile: None,
            monetization: Monetization::Division,
        }
    }
}

/// Shared fleet. Unset fields fall back to the population preset; the
/// tariff may also come from the scoring parameters of the `sav` mode.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tariff: Option<Tariff>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    pub kind: SchemeKind,
    /// Dollars per tolled link entry (facility) or per mile (distance).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fare: Option<f64>,
    /// Fare levels tried by a sweep.
    pub fares: Vec<f64>,
}

impl Default for SchemeSection {
    fn default() -> Self {
        SchemeSection {
            kind: SchemeKind::None,
            fare: None,
            fares: DEFAULT_FARE_GRID.to_vec(),
        }
    }
}

/// Experiment description, read from a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Root seed; every random draw derives from it.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Run directory. Relative paths are taken under the output root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub population: PopulationSection,
    #[serde(default)]
    pub scoring: ScoringSection,
    #[serde(default)]
    pub fleet: FleetSection,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub replanning: ReplanningConfig,
    #[serde(default)]
    pub outer: OuterLoopConfig,
    #[serde(default)]
    pub mobsim: MobsimConfig,
}

fn default_seed() -> u64 {
    1
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: default_seed(),
            output: None,
            network: NetworkSection::default(),
            population: PopulationSection::default(),
            scoring: ScoringSection::default(),
            fleet: FleetSection::default(),
            scheme: SchemeSection::default(),
            replanning: ReplanningConfig::default(),
            outer: OuterLoopConfig::default(),
            mobsim: MobsimConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Parses `text`; relative file references are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut c: ScenarioConfig = toml::from_str(text)?;
        for p in [
            &mut c.network.file,
            &mut c.population.file,
            &mut c.scoring.file,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let base = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        Self::from_toml(&text, &fs::canonicalize(base)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Checks the configuration without building the scenario.
    pub fn validate(&self) -> Result<()> {
        match (&self.network.fixture, &self.network.file) {
            (Some(_), Some(_)) => return Err(Error::Config("give either network.fixture or network.file".into())),
            (None, None) => return Err(Error::Config("network.fixture or network.file is required".into())),
            (Some(name), None) if fixtures::by_name(name).is_none() => {
                return Err(Error::Config(format!(
                    "unknown fixture `{name}`; available: {}",
                    FIXTURE_NAMES.join(", ")
                )))
            }
            _ => {}
        }
        if !(self.network.capacity_scale.is_finite() && self.network.capacity_scale > 0.0) {
            return Err(Error::OutOfRange {
                what: "capacity scale",
                value: self.network.capacity_scale,
            });
        }
        let p = &self.population;
        match (&p.file, p.n_agents) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("population.n_agents only applies to generated populations".into()))
            }
            (None, None) => return Err(Error::Config("population.file or population.n_agents is required".into())),
            (None, Some(0)) => return Err(Error::Config("population.n_agents must be positive".into())),
            (None, Some(_)) if p.preset.is_none() => {
                return Err(Error::Config("a generated population needs population.preset".into()))
            }
            _ => {}
        }
        for f in [&self.network.file, &p.file, &self.scoring.file].into_iter().flatten() {
            if !f.is_file() {
                return Err(Error::Config(format!("file `{}` does not exist", f.display())));
            }
        }
        if self.scoring.file.is_none() {
            ScoringConfig::preset(&self.scoring.preset)?;
        }
        for (what, v) in [
            ("car cost per mile", self.scoring.car_cost_per_mile),
            ("AV cost per mile", self.scoring.av_cost_per_mile),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::OutOfRange { what, value: v });
                }
            }
        }
        if let Some(t) = &self.fleet.tariff {
            t.validate()?;
        }
        let s = &self.scheme;
        if let Some(f) = s.fares.iter().chain(&s.fare).find(|f| !(f.is_finite() && **f >= 0.0)) {
            return Err(Error::OutOfRange { what: "fare", value: *f });
        }
        if s.kind.is_traditional() && s.fare.is_none() {
            return Err(Error::Config(format!("scheme {} needs a fare", s.kind.as_str())));
        }
        if !s.kind.is_traditional() && s.fare.is_some() {
            return Err(Error::Config(format!("scheme {} takes no fare", s.kind.as_str())));
        }
        self.replanning.validate()?;
        self.mobsim.validate()?;
        if self.outer.max_outer_iterations < 2 {
            return Err(Error::Config("outer.max_outer_iterations must be at least 2".into()));
        }
        Ok(())
    }

    pub fn scoring_config(&self) -> Result<ScoringConfig> {
        let mut scoring = match &self.scoring.file {
            Some(f) => ScoringConfig::from_toml(&fs::read_to_string(f)?)?,
            None => ScoringConfig::preset(&self.scoring.preset)?,
        };
        for (mode, rate) in [
            (Mode::Car, self.scoring.car_cost_per_mile),
            (Mode::Av, self.scoring.av_cost_per_mile),
        ] {
            if let (Some(rate), Some(m)) = (rate, scoring.modes.iter_mut().find(|m| m.mode == mode)) {
                m.distance_rate = rate;
            }
        }
        scoring.validate()?;
        Ok(scoring)
    }

    /// Builds the network, population and fleet.
    pub fn build(&self) -> Result<Scenario> {
        self.validate()?;
        let (network, locations) = match (&self.network.fixture, &self.network.file) {
            (Some(name), _) => {
                let f = fixtures::by_name(name).expect("validated fixture");
                (f.network, f.locations)
            }
            (None, Some(file)) => {
                let net = read_network(BufReader::new(File::open(file)?))?;
                let locations = Locations::uniform(&net);
                (net, locations)
            }
            (None, None) => unreachable!("validated network source"),
        };
        let network = if self.network.capacity_scale == 1.0 {
            network
        } else {
            network.with_capacity_scale(self.network.capacity_scale)?
        };
        let scoring = self.scoring_config()?;
        let preset = self.population.preset;
        let (agents, preset_fleet) = match &self.population.file {
            Some(file) => (read_population(BufReader::new(File::open(file)?), &network)?, 0),
            None => {
                let preset = preset.expect("validated preset");
                let n = self.population.n_agents.expect("validated size");
                let g = generate_scenario(preset, n, self.seed, &network, &locations)?;
                (g.agents, g.fleet_size)
            }
        };
        let size = self.fleet.size.unwrap_or(preset_fleet);
        let fleet = if size == 0 {
            None
        } else {
            let tariff = self
                .fleet
                .tariff
                .or(scoring.mode(Mode::Sav).tariff)
                .or_else(|| preset.and_then(Preset::tariff))
                .ok_or_else(|| Error::Config("a fleet needs fleet.tariff".into()))?;
            Some(FleetSetup {
                placements: place_fleet(size, &locations, self.seed),
                tariff,
            })
        };
        let scenario = Scenario {
            network,
            agents,
            fleet,
            scoring,
            mobsim: self.mobsim.clone(),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Start links of `size` fleet vehicles, drawn uniformly from the activity
/// locations.
pub fn place_fleet(size: usize, locations: &Locations, seed: u64) -> Vec<LinkId> {
    let mut pool: Vec<LinkId> = locations
        .home
        .iter()
        .chain(&locations.work)
        .chain(&locations.other)
        .copied()
        .collect();
    pool.sort();
    pool.dedup();
    let mut rng = substream(seed, Stream::FleetPlacement, 0);
    (0..size).map(|_| *pool.choose(&mut rng).expect("nonempty locations")).collect()
}
