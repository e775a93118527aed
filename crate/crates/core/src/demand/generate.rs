//! Synthetic populations for the Base, AV-oriented and SAV-oriented presets.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Activity, ActivityKind, Agent, AgentId, Mode, ModeSet, Plan, Trip, HOUR};
use crate::dispatch::Tariff;
use crate::error::{Error, Result};
use crate::network::{LinkId, Network};
use crate::rng::{substream, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Base,
    AvOriented,
    SavOriented,
}

impl Preset {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Preset::Base),
            "av-oriented" => Ok(Preset::AvOriented),
            "sav-oriented" => Ok(Preset::SavOriented),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Base => "base",
            Preset::AvOriented => "av-oriented",
            Preset::SavOriented => "sav-oriented",
        }
    }

    /// Share of agents with a conventional car.
    pub fn car_share(self) -> f64 {
        match self {
            Preset::Base | Preset::AvOriented => 0.9,
            Preset::SavOriented => 0.6,
        }
    }

    /// Share of agents with a private AV.
    pub fn av_share(self) -> f64 {
        match self {
            Preset::Base => 0.0,
            Preset::AvOriented => 0.9,
            Preset::SavOriented => 0.1,
        }
    }

    /// Agents per fleet vehicle, if the preset has an SAV fleet.
    pub fn agents_per_sav(self) -> Option<u32> {
        match self {
            Preset::Base => None,
            Preset::AvOriented => Some(30),
            Preset::SavOriented => Some(10),
        }
    }

    pub fn tariff(self) -> Option<Tariff> {
        let av = Tariff {
            flat: 0.50,
            per_mile: 0.40,
            per_minute: 0.10,
        };
        match self {
            Preset::Base => None,
            Preset::AvOriented => Some(av),
            Preset::SavOriented => Some(av.scaled(0.5)),
        }
    }

    pub fn fleet_size(self, n_agents: usize) -> usize {
        self.agents_per_sav()
            .map(|per| ((n_agents as f64 / f64::from(per)).round() as usize).max(1))
            .unwrap_or(0)
    }
}

/// Candidate activity locations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Locations {
    pub home: Vec<LinkId>,
    pub work: Vec<LinkId>,
    /// Education, shopping and leisure.
    pub other: Vec<LinkId>,
}

impl Locations {
    pub fn uniform(network: &Network) -> Self {
        let all: Vec<LinkId> = network.link_ids().collect();
        Locations {
            home: all.clone(),
            work: all.clone(),
            other: all,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ChainTemplate {
    pub activities: &'static [ActivityKind],
    pub weight: f64,
}

use ActivityKind::{Education as E, Home as H, Leisure as L, Shopping as S, Work as W};

/// Trip-chain profiles; weighted mean of 3.5 trips per agent.
pub const CHAIN_CATALOG: [ChainTemplate; 9] = [
    ChainTemplate { activities: &[H, W, H], weight: 0.15 },
    ChainTemplate { activities: &[H, E, H], weight: 0.05 },
    ChainTemplate { activities: &[H, W, S, H], weight: 0.15 },
    ChainTemplate { activities: &[H, W, L, H], weight: 0.10 },
    ChainTemplate { activities: &[H, S, L, H], weight: 0.05 },
    ChainTemplate { activities: &[H, W, H, L, H], weight: 0.15 },
    ChainTemplate { activities: &[H, W, S, H, L, H], weight: 0.20 },
    ChainTemplate { activities: &[H, E, H, S, H], weight: 0.05 },
    ChainTemplate { activities: &[H, W, S, L, H], weight: 0.10 },
];

#[derive(Clone, Debug)]
pub struct GeneratedScenario {
    pub agents: Vec<Agent>,
    pub fleet_size: usize,
    pub tariff: Option<Tariff>,
}

/// Draws `n_agents` agents with preset mode availability. Deterministic for
/// a given seed.
pub fn generate_scenario(
    preset: Preset,
    n_agents: usize,
    seed: u64,
    network: &Network,
    locations: &Locations,
) -> Result<GeneratedScenario> {
    if n_agents == 0 {
        return Err(Error::Config("n_agents must be positive".into()));
    }
    if locations.home.is_empty() || locations.work.is_empty() || locations.other.is_empty() {
        return Err(Error::Config("empty location set".into()));
    }
    for l in locations.home.iter().chain(&locations.work).chain(&locations.other) {
        if l.index() >= network.n_links() {
            return Err(Error::UnknownLink(l.to_string()));
        }
    }
    let mut rng = substream(seed, Stream::Generation, 0);

    let fleet_size = preset.fleet_size(n_agents);
    let n_car = (preset.car_share() * n_agents as f64).round() as usize;
    let n_av = (preset.av_share() * n_agents as f64).round() as usize;
    let mut order: Vec<usize> = (0..n_agents).collect();
    order.shuffle(&mut rng);
    let mut availability = vec![ModeSet::new(&[Mode::Pt, Mode::WalkBike]); n_agents];
    for (rank, &agent) in order.iter().enumerate() {
        let set = &mut availability[agent];
        match preset {
            // AV owners keep their car; the two sets coincide
            Preset::AvOriented => {
                if rank < n_av {
                    set.insert(Mode::Av);
                    set.insert(Mode::Car);
                }
            }
            _ => {
                if rank < n_car {
                    set.insert(Mode::Car);
                } else if rank < n_car + n_av {
                    set.insert(Mode::Av);
                }
            }
        }
        if fleet_size > 0 {
            set.insert(Mode::Sav);
        }
    }

    let total_weight: f64 = CHAIN_CATALOG.iter().map(|c| c.weight).sum();
    let mut agents = Vec::with_capacity(n_agents);
    for (i, modes) in availability.into_iter().enumerate() {
        let mut pick = rng.gen::<f64>() * total_weight;
        let template = CHAIN_CATALOG
            .iter()
            .find(|c| {
                pick -= c.weight;
                pick < 0.0
            })
            .unwrap_or(&CHAIN_CATALOG[CHAIN_CATALOG.len() - 1]);
        let mode = initial_mode(modes, &mut rng);
        let plan = draw_plan(template, mode, locations, &mut rng);
        agents.push(Agent::new(AgentId(i as u32), format!("agent{i}"), modes, plan));
    }
    Ok(GeneratedScenario {
        agents,
        fleet_size,
        tariff: preset.tariff(),
    })
}

fn initial_mode(modes: ModeSet, rng: &mut impl Rng) -> Mode {
    if modes.contains(Mode::Av) {
        Mode::Av
    } else if modes.contains(Mode::Car) {
        Mode::Car
    } else {
        let shared: Vec<Mode> = modes.iter().filter(|m| !m.is_private_vehicle()).collect();
        *shared.choose(rng).expect("pt is always available")
    }
}

/// Symmetric triangular draw on `center ± half_width` seconds.
fn jitter(rng: &mut impl Rng, center: f64, half_width: f64) -> f64 {
    center + (rng.gen::<f64>() + rng.gen::<f64>() - 1.0) * half_width
}

fn draw_plan(template: &ChainTemplate, mode: Mode, locations: &Locations, rng: &mut impl Rng) -> Plan {
    let h = f64::from(HOUR);
    let home = *locations.home.choose(rng).expect("nonempty");
    let starts_with_work = matches!(template.activities[1], W | E);
    let mut clock = if starts_with_work {
        jitter(rng, 7.5 * h, 1.0 * h)
    } else {
        jitter(rng, 10.0 * h, 1.5 * h)
    };
    // rough allowance for travel between consecutive activities
    let travel = 0.25 * h;
    let n = template.activities.len();
    let mut activities = Vec::with_capacity(n);
    for (i, &kind) in template.activities.iter().enumerate() {
        let link = match kind {
            H => home,
            W => *locations.work.choose(rng).expect("nonempty"),
            _ => *locations.other.choose(rng).expect("nonempty"),
        };
        let end_time = if i + 1 == n {
            None
        } else {
            if i > 0 {
                let duration = match kind {
                    W => jitter(rng, 8.5 * h, 1.0 * h),
                    E => jitter(rng, 6.0 * h, 1.0 * h),
                    S => jitter(rng, 1.0 * h, 0.5 * h),
                    L => jitter(rng, 2.0 * h, 1.0 * h),
                    H => jitter(rng, 1.5 * h, 0.5 * h),
                };
                clock += travel + duration;
            }
            Some(clock.round().max(0.0) as u32)
        };
        activities.push(Activity { kind, link, end_time });
    }
    let trips = (0..n - 1)
        .map(|_| Trip {
            mode,
            route: Vec::new(),
        })
        .collect();
    Plan {
        activities,
        trips,
        score: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    #[test]
    fn catalog_mean_is_three_and_a_half_trips() {
        let mean: f64 = CHAIN_CATALOG
            .iter()
            .map(|c| c.weight * (c.activities.len() - 1) as f64)
            .sum();
        assert!((mean - 3.5).abs() < 1e-12);
        let total: f64 = CHAIN_CATALOG.iter().map(|c| c.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fleet_sizes_follow_presets() {
        assert_eq!(Preset::AvOriented.fleet_size(300), 10);
        assert_eq!(Preset::SavOriented.fleet_size(300), 30);
        assert_eq!(Preset::Base.fleet_size(300), 0);
        assert!(Preset::parse("austin").is_err());
    }

    #[test]
    fn sav_oriented_availability() {
        let f = fixtures::grid();
        let g = generate_scenario(Preset::SavOriented, 300, 7, &f.network, &f.locations).unwrap();
        assert_eq!(g.fleet_size, 30);
        let cars = g.agents.iter().filter(|a| a.modes.contains(Mode::Car)).count();
        let avs = g.agents.iter().filter(|a| a.modes.contains(Mode::Av)).count();
        assert_eq!(cars, 180);
        assert_eq!(avs, 30);
        assert!(g.agents.iter().all(|a| a.modes.contains(Mode::Sav)));
    }

    #[test]
    fn base_agents_without_car_use_transit_or_walk() {
        let f = fixtures::grid();
        let g = generate_scenario(Preset::Base, 200, 1, &f.network, &f.locations).unwrap();
        for a in &g.agents {
            assert!(!a.modes.contains(Mode::Av) && !a.modes.contains(Mode::Sav));
            if !a.modes.contains(Mode::Car) {
                assert_eq!(a.modes, ModeSet::new(&[Mode::Pt, Mode::WalkBike]));
            }
        }
    }

    #[test]
    fn same_seed_same_population() {
        let f = fixtures::grid();
        let a = generate_scenario(Preset::AvOriented, 100, 3, &f.network, &f.locations).unwrap();
        let b = generate_scenario(Preset::AvOriented, 100, 3, &f.network, &f.locations).unwrap();
        let c = generate_scenario(Preset::AvOriented, 100, 4, &f.network, &f.locations).unwrap();
        assert_eq!(a.agents, b.agents);
        assert_ne!(a.agents, c.agents);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn preset_shares_within_one_agent(n in 1usize..400, seed in 0u64..1000, p in 0usize..3) {
            let preset = [Preset::Base, Preset::AvOriented, Preset::SavOriented][p];
            let f = fixtures::corridor();
            let g = generate_scenario(preset, n, seed, &f.network, &f.locations).unwrap();
            let cars = g.agents.iter().filter(|a| a.modes.contains(Mode::Car)).count() as f64;
            let avs = g.agents.iter().filter(|a| a.modes.contains(Mode::Av)).count() as f64;
            let car_target = if preset == Preset::AvOriented { preset.av_share() } else { preset.car_share() };
            prop_assert!((cars - car_target * n as f64).abs() <= 1.0);
            prop_assert!((avs - preset.av_share() * n as f64).abs() <= 1.0);
            for a in &g.agents {
                prop_assert!(a.selected_plan().validate_structure().is_ok());
                prop_assert!(a.modes.contains(a.selected_plan().main_mode().unwrap()));
            }
        }
    }
}
