//! Population file: JSON lines.
//!
//! The first line is a header `{"format":"tollsim-population","version":1}`.
//! Every following line is one agent:
//!
//! ```text
//! {"id":"a1","modes":["car","pt","walk_bike"],"chain":[
//!    {"act":"home","link":"l3","end":27000},
//!    {"mode":"car"},
//!    {"act":"work","link":"l9","end":61200},
//!    {"mode":"car","route":["l4","l9"]},
//!    {"act":"home","link":"l3"}]}
//! ```
//!
//! Chain entries alternate activities and trips. Routes are optional; trips
//! without one are routed before the first simulated day.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Activity, ActivityKind, Agent, AgentId, Mode, ModeSet, Plan, Trip};
use crate::error::{Error, Result};
use crate::network::Network;

pub const POPULATION_FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "tollsim-population";

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Serialize, Deserialize)]
struct Record {
    id: String,
    modes: ModeSet,
    chain: Vec<Element>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Element {
    Act {
        act: ActivityKind,
        link: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        end: Option<u32>,
    },
    Trip {
        mode: Mode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        route: Option<Vec<String>>,
    },
}

pub fn read_population<R: BufRead>(reader: R, network: &Network) -> Result<Vec<Agent>> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Population {
        line: 1,
        reason: "missing header".into(),
    })?;
    let header: Header = serde_json::from_str(&header?).map_err(|e| Error::Population {
        line: 1,
        reason: format!("bad header: {e}"),
    })?;
    if header.format != FORMAT_NAME || header.version != POPULATION_FORMAT_VERSION {
        return Err(Error::Population {
            line: 1,
            reason: format!("unsupported format {} v{}", header.format, header.version),
        });
    }

    let mut agents = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| Error::Population {
            line: line_no,
            reason,
        };
        let rec: Record = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let plan = decode_chain(&rec.chain, network).map_err(|e| err(e.to_string()))?;
        plan.validate_structure().map_err(|e| err(e.to_string()))?;
        for t in &plan.trips {
            if !rec.modes.contains(t.mode) {
                return Err(err(format!("mode {} not available to agent", t.mode)));
            }
        }
        let id = AgentId(agents.len() as u32);
        agents.push(Agent::new(id, rec.id, rec.modes, plan));
    }
    Ok(agents)
}

fn decode_chain(chain: &[Element], network: &Network) -> Result<Plan> {
    let link = |name: &str| {
        network
            .link_by_name(name)
            .ok_or_else(|| Error::UnknownLink(name.to_string()))
    };
    let mut activities = Vec::new();
    let mut trips = Vec::new();
    for (i, el) in chain.iter().enumerate() {
        match (i % 2, el) {
            (0, Element::Act { act, link: l, end }) => activities.push(Activity {
                kind: *act,
                link: link(l)?,
                end_time: *end,
            }),
            (1, Element::Trip { mode, route }) => trips.push(Trip {
                mode: *mode,
                route: route
                    .iter()
                    .flatten()
                    .map(|n| link(n))
                    .collect::<Result<_>>()?,
            }),
            _ => {
                return Err(Error::Malformed {
                    what: "chain",
                    reason: format!("element {i} breaks activity/trip alternation"),
                })
            }
        }
    }
    Ok(Plan {
        activities,
        trips,
        score: None,
    })
}

/// Writes each agent's selected plan.
pub fn write_population<W: Write>(mut writer: W, agents: &[Agent], network: &Network) -> Result<()> {
    serde_json::to_writer(
        &mut writer,
        &Header {
            format: FORMAT_NAME.into(),
            version: POPULATION_FORMAT_VERSION,
        },
    )?;
    writeln!(writer)?;
    let name = |l: crate::network::LinkId| network.link(l).name.clone();
    for agent in agents {
        let plan = agent.selected_plan();
        let mut chain = Vec::with_capacity(plan.activities.len() * 2);
        for (i, a) in plan.activities.iter().enumerate() {
            chain.push(Element::Act {
                act: a.kind,
                link: name(a.link),
                end: a.end_time,
            });
            if let Some(t) = plan.trips.get(i) {
                chain.push(Element::Trip {
                    mode: t.mode,
                    route: (!t.route.is_empty()).then(|| t.route.iter().map(|l| name(*l)).collect()),
                });
            }
        }
        serde_json::to_writer(
            &mut writer,
            &Record {
                id: agent.name.clone(),
                modes: agent.modes,
                chain,
            },
        )?;
        writeln!(writer)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const HEADER: &str = r#"{"format":"tollsim-population","version":1}"#;

    #[test]
    fn loads_minimal_chain() {
        let net = fixtures::corridor().network;
        let text = format!(
            "{HEADER}\n{}\n",
            r#"{"id":"a1","modes":["car","pt","walk_bike"],"chain":[{"act":"home","link":"h0","end":28800},{"mode":"car"},{"act":"work","link":"w0","end":61200},{"mode":"car"},{"act":"home","link":"h0"}]}"#
        );
        let agents = read_population(text.as_bytes(), &net).unwrap();
        assert_eq!(agents.len(), 1);
        assert_eq!(agents[0].selected_plan().trips.len(), 2);
        assert!(agents[0].modes.contains(Mode::Car));

        let mut out = Vec::new();
        write_population(&mut out, &agents, &net).unwrap();
        let again = read_population(out.as_slice(), &net).unwrap();
        assert_eq!(again, agents);
    }

    #[test]
    fn rejects_bad_records() {
        let net = fixtures::corridor().network;
        let cases = [
            // unknown activity type
            r#"{"id":"a","modes":["pt"],"chain":[{"act":"gym","link":"h0","end":1},{"mode":"pt"},{"act":"home","link":"h0"}]}"#,
            // broken chain
            r#"{"id":"a","modes":["pt"],"chain":[{"act":"home","link":"h0","end":1},{"act":"home","link":"h0"}]}"#,
            // unknown link
            r#"{"id":"a","modes":["pt"],"chain":[{"act":"home","link":"nope","end":1},{"mode":"pt"},{"act":"home","link":"nope"}]}"#,
            // unavailable mode
            r#"{"id":"a","modes":["pt"],"chain":[{"act":"home","link":"h0","end":1},{"mode":"car"},{"act":"home","link":"h0"}]}"#,
        ];
        for case in cases {
            let text = format!("{HEADER}\n{case}\n");
            let err = read_population(text.as_bytes(), &net).unwrap_err();
            assert!(matches!(err, Error::Population { line: 2, .. }), "{err}");
        }
        assert!(read_population("{\"format\":\"x\",\"version\":1}\n".as_bytes(), &net).is_err());
    }

    #[test]
    fn unreachable_trip_loads() {
        // routing is deferred; structural validity is all that is checked here
        let net = fixtures::diamond().network;
        let text = format!(
            "{HEADER}\n{}\n",
            r#"{"id":"a1","modes":["car"],"chain":[{"act":"home","link":"home","end":28800},{"mode":"car"},{"act":"work","link":"work","end":61200},{"mode":"car"},{"act":"home","link":"home"}]}"#
        );
        let agents = read_population(text.as_bytes(), &net).unwrap();
        assert!(!agents[0].selected_plan().is_routed(&net));
    }
}
