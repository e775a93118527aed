//! Synthetic networks shipped with the simulator.
//!
//! - `corridor`: a two-way arterial with one single-lane bottleneck, homes
//!   at the west end and workplaces at the east end.
//! - `diamond`: two parallel two-link routes between a home link and a work
//!   link, with a fast return road.
//! - `grid`: 10×10 grid with 500 m blocks and a high-capacity cross through
//!   the center; homes on the periphery, workplaces downtown.

use crate::demand::Locations;
use crate::network::{LinkId, LinkRecord, Network, NodeRecord};

pub const FIXTURE_NAMES: [&str; 3] = ["corridor", "diamond", "grid"];

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub network: Network,
    pub locations: Locations,
}

pub fn by_name(name: &str) -> Option<Fixture> {
    match name {
        "corridor" => Some(corridor()),
        "diamond" => Some(diamond()),
        "grid" => Some(grid()),
        _ => None,
    }
}

fn node(id: impl Into<String>, x: f64, y: f64) -> NodeRecord {
    NodeRecord { id: id.into(), x, y }
}

fn link(
    id: impl Into<String>,
    from: impl Into<String>,
    to: impl Into<String>,
    length_m: f64,
    freespeed_ms: f64,
    capacity_vph: f64,
    lanes: f64,
) -> LinkRecord {
    LinkRecord {
        id: id.into(),
        from: from.into(),
        to: to.into(),
        length_m,
        freespeed_ms,
        capacity_vph,
        lanes,
    }
}

fn ids(net: &Network, names: &[String]) -> Vec<LinkId> {
    names
        .iter()
        .map(|n| net.link_by_name(n).expect("fixture link"))
        .collect()
}

pub fn corridor() -> Fixture {
    const SPEED: f64 = 13.89;
    const STUBS: usize = 4;
    let mut nodes: Vec<NodeRecord> = (0..6).map(|i| node(format!("r{i}"), i as f64 * 1000.0, 0.0)).collect();
    let mut links = Vec::new();
    for i in 0..5 {
        let (cap, lanes) = if i == 2 { (600.0, 1.0) } else { (1800.0, 2.0) };
        links.push(link(format!("e{i}"), format!("r{i}"), format!("r{}", i + 1), 1000.0, SPEED, cap, lanes));
        links.push(link(format!("w{i}x"), format!("r{}", i + 1), format!("r{i}"), 1000.0, SPEED, cap, lanes));
    }
    let mut homes = Vec::new();
    let mut works = Vec::new();
    for s in 0..STUBS {
        let y = (s as f64 - 1.5) * 200.0;
        nodes.push(node(format!("hn{s}"), -300.0, y));
        nodes.push(node(format!("wn{s}"), 5300.0, y));
        links.push(link(format!("h{s}"), format!("hn{s}"), "r0", 300.0, SPEED, 1800.0, 2.0));
        links.push(link(format!("h{s}in"), "r0", format!("hn{s}"), 300.0, SPEED, 1800.0, 2.0));
        links.push(link(format!("w{s}"), "r5", format!("wn{s}"), 300.0, SPEED, 1800.0, 2.0));
        links.push(link(format!("w{s}out"), format!("wn{s}"), "r5", 300.0, SPEED, 1800.0, 2.0));
        homes.push(format!("h{s}"));
        works.push(format!("w{s}"));
    }
    let network = Network::build(nodes, links).expect("corridor fixture");
    let other: Vec<String> = ["e1", "e3", "e4", "w3x"].iter().map(|s| s.to_string()).collect();
    let locations = Locations {
        home: ids(&network, &homes),
        work: ids(&network, &works),
        other: ids(&network, &other),
    };
    Fixture {
        name: "corridor",
        network,
        locations,
    }
}

pub fn diamond() -> Fixture {
    let nodes = vec![
        node("h", -1000.0, 0.0),
        node("a", 0.0, 0.0),
        node("b", 1000.0, 500.0),
        node("c", 1000.0, -500.0),
        node("d", 2000.0, 0.0),
        node("w", 3000.0, 0.0),
    ];
    let links = vec![
        link("home", "h", "a", 1000.0, 13.89, 3600.0, 2.0),
        link("ab", "a", "b", 1118.0, 13.89, 600.0, 1.0),
        link("bd", "b", "d", 1118.0, 13.89, 600.0, 1.0),
        link("ac", "a", "c", 1118.0, 11.11, 600.0, 1.0),
        link("cd", "c", "d", 1118.0, 11.11, 600.0, 1.0),
        link("work", "d", "w", 1000.0, 13.89, 3600.0, 2.0),
        link("back", "w", "h", 4000.0, 22.22, 3600.0, 2.0),
    ];
    let network = Network::build(nodes, links).expect("diamond fixture");
    let home = vec![network.link_by_name("home").unwrap()];
    let work = vec![network.link_by_name("work").unwrap()];
    Fixture {
        name: "diamond",
        network,
        locations: Locations {
            home,
            work: work.clone(),
            other: work,
        },
    }
}

pub fn grid() -> Fixture {
    const N: usize = 10;
    const BLOCK: f64 = 500.0;
    const CROSS: usize = 5;
    let name = |i: usize, j: usize| format!("n{i}_{j}");
    let mut nodes = Vec::with_capacity(N * N);
    for i in 0..N {
        for j in 0..N {
            nodes.push(node(name(i, j), i as f64 * BLOCK, j as f64 * BLOCK));
        }
    }
    let mut links = Vec::new();
    let mut homes = Vec::new();
    let mut works = Vec::new();
    let mut push = |a: (usize, usize), b: (usize, usize)| {
        let on_cross = (a.0 == CROSS && b.0 == CROSS) || (a.1 == CROSS && b.1 == CROSS);
        let (speed, cap, lanes) = if on_cross {
            (16.67, 1200.0, 2.0)
        } else {
            (11.11, 400.0, 1.0)
        };
        let id = format!("g{}_{}-{}_{}", a.0, a.1, b.0, b.1);
        let periphery = |p: (usize, usize)| p.0 <= 1 || p.0 >= N - 2 || p.1 <= 1 || p.1 >= N - 2;
        let downtown = |p: (usize, usize)| (3..=6).contains(&p.0) && (3..=6).contains(&p.1);
        if periphery(a) && periphery(b) {
            homes.push(id.clone());
        }
        if downtown(a) && downtown(b) && !on_cross {
            works.push(id.clone());
        }
        links.push(link(id, name(a.0, a.1), name(b.0, b.1), BLOCK, speed, cap, lanes));
    };
    for i in 0..N {
        for j in 0..N {
            if i + 1 < N {
                push((i, j), (i + 1, j));
                push((i + 1, j), (i, j));
            }
            if j + 1 < N {
                push((i, j), (i, j + 1));
                push((i, j + 1), (i, j));
            }
        }
    }
    let network = Network::build(nodes, links).expect("grid fixture");
    let other: Vec<LinkId> = network.link_ids().collect();
    let locations = Locations {
        home: ids(&network, &homes),
        work: ids(&network, &works),
        other,
    };
    Fixture {
        name: "grid",
        network,
        locations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        for name in FIXTURE_NAMES {
            let f = by_name(name).unwrap();
            assert!(!f.locations.home.is_empty(), "{name}");
            assert!(!f.locations.work.is_empty(), "{name}");
        }
        let g = grid();
        assert_eq!(g.network.n_nodes(), 100);
        assert_eq!(g.network.n_links(), 360);
        assert!(by_name("austin").is_none());
    }
}
