//! Network file format.
//!
//! One comma-separated UTF-8 file with a single header row:
//!
//! ```text
//! kind,id,x,y,from,to,length_m,freespeed_ms,capacity_vph,lanes
//! node,n1,0,0,,,,,,
//! link,l1,,,n1,n2,1000,13.9,1800,1
//! ```
//!
//! Node rows fill `x,y`; link rows fill `from..lanes`. Row order defines the
//! dense link index used in event logs.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{LinkRecord, Network, NodeRecord};
use crate::error::{Error, Result};

#[derive(Debug, Default, Serialize, Deserialize)]
struct Row {
    kind: String,
    id: String,
    x: Option<f64>,
    y: Option<f64>,
    from: Option<String>,
    to: Option<String>,
    length_m: Option<f64>,
    freespeed_ms: Option<f64>,
    capacity_vph: Option<f64>,
    lanes: Option<f64>,
}

fn missing(id: &str, field: &str) -> Error {
    Error::Malformed {
        what: "network file",
        reason: format!("record `{id}` lacks `{field}`"),
    }
}

pub fn read_network<R: Read>(reader: R) -> Result<Network> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut nodes = Vec::new();
    let mut links = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        match row.kind.as_str() {
            "node" => nodes.push(NodeRecord {
                x: row.x.ok_or_else(|| missing(&row.id, "x"))?,
                y: row.y.ok_or_else(|| missing(&row.id, "y"))?,
                id: row.id,
            }),
            "link" => links.push(LinkRecord {
                from: row.from.clone().ok_or_else(|| missing(&row.id, "from"))?,
                to: row.to.clone().ok_or_else(|| missing(&row.id, "to"))?,
                length_m: row.length_m.ok_or_else(|| missing(&row.id, "length_m"))?,
                freespeed_ms: row
                    .freespeed_ms
                    .ok_or_else(|| missing(&row.id, "freespeed_ms"))?,
                capacity_vph: row
                    .capacity_vph
                    .ok_or_else(|| missing(&row.id, "capacity_vph"))?,
                lanes: row.lanes.ok_or_else(|| missing(&row.id, "lanes"))?,
                id: row.id,
            }),
            other => {
                return Err(Error::Malformed {
                    what: "network file",
                    reason: format!("unknown record kind `{other}`"),
                })
            }
        }
    }
    Network::build(nodes, links)
}

pub fn write_network<W: Write>(network: &Network, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let (nodes, links) = network.records();
    for n in nodes {
        wtr.serialize(Row {
            kind: "node".into(),
            id: n.id.clone(),
            x: Some(n.x),
            y: Some(n.y),
            ..Row::default()
        })?;
    }
    for l in links {
        wtr.serialize(Row {
            kind: "link".into(),
            id: l.id.clone(),
            from: Some(l.from.clone()),
            to: Some(l.to.clone()),
            length_m: Some(l.length_m),
            freespeed_ms: Some(l.freespeed_ms),
            capacity_vph: Some(l.capacity_vph),
            lanes: Some(l.lanes),
            ..Row::default()
        })?;
    }
    wtr.flush()?;
    Ok(())
}
