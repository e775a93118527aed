//! Directed road graph with queue parameters per link.
//!
//! Internally everything is in seconds and meters. Node and link ids read from
//! files are kept as opaque strings; the simulator addresses links through the
//! dense [`LinkId`] index, which is the position of the link in its input list.

mod flow;
mod io;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use flow::{
    additional_users, average_speed, effective_flow_capacity, link_delay, FlowObservation,
};
pub use io::{read_network, write_network};

/// Length of road occupied by one queued vehicle.
pub const EFFECTIVE_VEHICLE_LENGTH_M: f64 = 7.5;
pub const METERS_PER_MILE: f64 = 1609.344;
pub const METERS_PER_KM: f64 = 1000.0;
pub const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkId(pub u32);

impl LinkId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Node as read from a network file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

/// Link as read from a network file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length_m: f64,
    pub freespeed_ms: f64,
    pub capacity_vph: f64,
    pub lanes: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub name: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub name: String,
    pub from: NodeId,
    pub to: NodeId,
    /// Meters.
    pub length: f64,
    /// Meters per second.
    pub free_speed: f64,
    /// Vehicles per hour for a stream of conventional vehicles.
    pub flow_capacity: f64,
    pub lanes: f64,
    /// Vehicles that fit on the link at jam density.
    pub storage_capacity: u32,
}

impl Link {
    /// Free-flow traversal time on the simulator's one-second clock.
    pub fn free_flow_time(&self) -> u32 {
        let exact = self.length / self.free_speed;
        (exact - 1e-9).ceil().max(1.0) as u32
    }

    pub fn length_miles(&self) -> f64 {
        self.length / METERS_PER_MILE
    }
}

/// Immutable road network. Adjacency is indexed in both directions.
#[derive(Clone, Debug)]
pub struct Network {
    nodes: Vec<Node>,
    links: Vec<Link>,
    out_links: Vec<Vec<LinkId>>,
    in_links: Vec<Vec<LinkId>>,
    link_index: HashMap<String, LinkId>,
    node_index: HashMap<String, NodeId>,
    records: (Vec<NodeRecord>, Vec<LinkRecord>),
}

impl Network {
    /// Validates the records and builds the indexed network.
    pub fn build(nodes: Vec<NodeRecord>, links: Vec<LinkRecord>) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::NoLinks);
        }
        let mut node_index = HashMap::with_capacity(nodes.len());
        let mut built_nodes = Vec::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if !(n.x.is_finite() && n.y.is_finite()) {
                return Err(Error::NonFiniteCoordinate(n.id.clone()));
            }
            if node_index.insert(n.id.clone(), NodeId(i as u32)).is_some() {
                return Err(Error::DuplicateId {
                    kind: "node",
                    id: n.id.clone(),
                });
            }
            built_nodes.push(Node {
                name: n.id.clone(),
                x: n.x,
                y: n.y,
            });
        }

        let mut link_index = HashMap::with_capacity(links.len());
        let mut built_links = Vec::with_capacity(links.len());
        let mut out_links = vec![Vec::new(); nodes.len()];
        let mut in_links = vec![Vec::new(); nodes.len()];
        for (i, l) in links.iter().enumerate() {
            let id = LinkId(i as u32);
            if link_index.insert(l.id.clone(), id).is_some() {
                return Err(Error::DuplicateId {
                    kind: "link",
                    id: l.id.clone(),
                });
            }
            let lookup = |name: &str| {
                node_index
                    .get(name)
                    .copied()
                    .ok_or_else(|| Error::DanglingNode {
                        link: l.id.clone(),
                        node: name.to_string(),
                    })
            };
            let from = lookup(&l.from)?;
            let to = lookup(&l.to)?;
            for (attr, value) in [
                ("length_m", l.length_m),
                ("freespeed_ms", l.freespeed_ms),
                ("capacity_vph", l.capacity_vph),
                ("lanes", l.lanes),
            ] {
                if !(value.is_finite() && value > 0.0) {
                    return Err(Error::NonPositive {
                        link: l.id.clone(),
                        attr,
                        value,
                    });
                }
            }
            out_links[from.index()].push(id);
            in_links[to.index()].push(id);
            built_links.push(Link {
                name: l.id.clone(),
                from,
                to,
                length: l.length_m,
                free_speed: l.freespeed_ms,
                flow_capacity: l.capacity_vph,
                lanes: l.lanes,
                storage_capacity: storage_capacity(l.lanes, l.length_m, 1.0),
            });
        }

        Ok(Network {
            nodes: built_nodes,
            links: built_links,
            out_links,
            in_links,
            link_index,
            node_index,
            records: (nodes, links),
        })
    }

    /// Copy with flow and storage capacities multiplied by `factor`, for
    /// running a population sample against a full-size network.
    pub fn with_capacity_scale(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::OutOfRange {
                what: "capacity scale",
                value: factor,
            });
        }
        let mut scaled = self.clone();
        for link in &mut scaled.links {
            link.flow_capacity *= factor;
            link.storage_capacity = storage_capacity(link.lanes, link.length, factor);
        }
        Ok(scaled)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_ids(&self) -> impl Iterator<Item = LinkId> + '_ {
        (0..self.links.len() as u32).map(LinkId)
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.index()]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn out_links(&self, node: NodeId) -> &[LinkId] {
        &self.out_links[node.index()]
    }

    pub fn in_links(&self, node: NodeId) -> &[LinkId] {
        &self.in_links[node.index()]
    }

    pub fn link_by_name(&self, name: &str) -> Option<LinkId> {
        self.link_index.get(name).copied()
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.node_index.get(name).copied()
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Records the network was built from (unscaled).
    pub fn records(&self) -> (&[NodeRecord], &[LinkRecord]) {
        (&self.records.0, &self.records.1)
    }

    /// Point where trips on this link start and end: the link's downstream node.
    pub fn link_anchor(&self, id: LinkId) -> (f64, f64) {
        let node = self.node(self.link(id).to);
        (node.x, node.y)
    }

    /// Straight-line distance between the anchors of two links, meters.
    pub fn beeline(&self, a: LinkId, b: LinkId) -> f64 {
        let (ax, ay) = self.link_anchor(a);
        let (bx, by) = self.link_anchor(b);
        (ax - bx).hypot(ay - by)
    }

    /// Length-weighted mean free speed over all links, m/s.
    pub fn mean_free_speed(&self) -> f64 {
        let total_len: f64 = self.links.iter().map(|l| l.length).sum();
        let total_time: f64 = self.links.iter().map(|l| l.length / l.free_speed).sum();
        total_len / total_time
    }
}

fn storage_capacity(lanes: f64, length: f64, scale: f64) -> u32 {
    let cells = (lanes * length * scale / EFFECTIVE_VEHICLE_LENGTH_M).floor();
    cells.max(1.0) as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str, x: f64, y: f64) -> NodeRecord {
        NodeRecord {
            id: id.into(),
            x,
            y,
        }
    }

    fn link(id: &str, from: &str, to: &str, length: f64) -> LinkRecord {
        LinkRecord {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            length_m: length,
            freespeed_ms: 10.0,
            capacity_vph: 1800.0,
            lanes: 1.0,
        }
    }

    #[test]
    fn storage_from_length_and_lanes() {
        let net = Network::build(
            vec![node("a", 0.0, 0.0), node("b", 1000.0, 0.0)],
            vec![link("ab", "a", "b", 1000.0)],
        )
        .unwrap();
        // floor(1000 / 7.5)
        assert_eq!(net.link(LinkId(0)).storage_capacity, 133);
        assert_eq!(net.out_links(NodeId(0)), &[LinkId(0)]);
        assert_eq!(net.in_links(NodeId(1)), &[LinkId(0)]);
        assert_eq!(net.link(LinkId(0)).free_flow_time(), 100);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(matches!(
            Network::build(vec![node("a", 0.0, 0.0)], vec![]),
            Err(Error::NoLinks)
        ));
        assert!(matches!(
            Network::build(
                vec![node("a", 0.0, 0.0)],
                vec![link("ab", "a", "zz", 10.0)]
            ),
            Err(Error::DanglingNode { .. })
        ));
        assert!(matches!(
            Network::build(
                vec![node("a", 0.0, 0.0), node("a", 1.0, 0.0)],
                vec![link("ab", "a", "a", 10.0)]
            ),
            Err(Error::DuplicateId { kind: "node", .. })
        ));
        assert!(matches!(
            Network::build(
                vec![node("a", 0.0, 0.0), node("b", 1.0, 0.0)],
                vec![link("ab", "a", "b", 0.0)]
            ),
            Err(Error::NonPositive {
                attr: "length_m",
                ..
            })
        ));
    }

    #[test]
    fn capacity_scale_shrinks_flow_and_storage() {
        let net = Network::build(
            vec![node("a", 0.0, 0.0), node("b", 1000.0, 0.0)],
            vec![link("ab", "a", "b", 1000.0)],
        )
        .unwrap();
        let sample = net.with_capacity_scale(0.05).unwrap();
        assert!((sample.link(LinkId(0)).flow_capacity - 90.0).abs() < 1e-9);
        assert_eq!(sample.link(LinkId(0)).storage_capacity, 6);
        assert!(net.with_capacity_scale(0.0).is_err());
    }

    #[test]
    fn tiny_links_keep_one_storage_cell() {
        let net = Network::build(
            vec![node("a", 0.0, 0.0), node("b", 1.0, 0.0)],
            vec![link("ab", "a", "b", 2.0)],
        )
        .unwrap();
        assert_eq!(net.link(LinkId(0)).storage_capacity, 1);
    }
}
