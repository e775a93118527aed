//! Simulation events and their line-delimited JSON form.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::demand::{ActivityKind, AgentId, Mode};
use crate::dispatch::RequestId;
use crate::error::{Error, Result};
use crate::network::LinkId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleId {
    /// The agent's own car or AV.
    Private(AgentId),
    /// Fleet vehicle.
    Sav(u32),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    ActEnd {
        agent: AgentId,
        act: ActivityKind,
        link: LinkId,
    },
    Depart {
        agent: AgentId,
        mode: Mode,
        link: LinkId,
    },
    LinkEnter {
        vehicle: VehicleId,
        link: LinkId,
        automated: bool,
    },
    LinkLeave {
        vehicle: VehicleId,
        link: LinkId,
    },
    Arrive {
        agent: AgentId,
        mode: Mode,
        link: LinkId,
    },
    ActStart {
        agent: AgentId,
        act: ActivityKind,
        link: LinkId,
    },
    TollCharged {
        agent: AgentId,
        /// Set for charges levied on link entry.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        link: Option<LinkId>,
        cents: i64,
    },
    SavRequest {
        agent: AgentId,
        request: RequestId,
        origin: LinkId,
        destination: LinkId,
    },
    /// A fleet vehicle was assigned to a request and starts its approach.
    SavAssign {
        vehicle: u32,
        agent: AgentId,
        request: RequestId,
    },
    SavPickup {
        vehicle: u32,
        agent: AgentId,
        link: LinkId,
    },
    SavDropoff {
        vehicle: u32,
        agent: AgentId,
        link: LinkId,
        fare_cents: i64,
    },
    /// A fleet vehicle without passenger entered `link` on its way to pick
    /// up `agent`.
    SavEmptyDrive {
        vehicle: u32,
        agent: AgentId,
        link: LinkId,
    },
    /// A trip still in progress at the end of the simulated day. `link` is
    /// set when the vehicle still occupies that link.
    Stuck {
        agent: AgentId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vehicle: Option<VehicleId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        link: Option<LinkId>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: u32,
    #[serde(flatten)]
    pub kind: EventKind,
}

const FORMAT_NAME: &str = "tollsim-events";
pub const EVENTS_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    horizon: u32,
}

/// Events of one simulated day in emission order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    /// End of the simulated day, seconds.
    pub horizon: u32,
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(
            &mut w,
            &Header {
                format: FORMAT_NAME.into(),
                version: EVENTS_FORMAT_VERSION,
                horizon: self.horizon,
            },
        )?;
        writeln!(w)?;
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header: Header = match lines.next() {
            Some(line) => serde_json::from_str(&line?)?,
            None => {
                return Err(Error::Malformed {
                    what: "event log",
                    reason: "empty file".into(),
                })
            }
        };
        if header.format != FORMAT_NAME || header.version != EVENTS_FORMAT_VERSION {
            return Err(Error::Malformed {
                what: "event log",
                reason: format!("unsupported format {} v{}", header.format, header.version),
            });
        }
        let mut events = Vec::new();
        for line in lines {
            let line = line?;
            if !line.trim().is_empty() {
                events.push(serde_json::from_str(&line)?);
            }
        }
        Ok(EventLog {
            horizon: header.horizon,
            events,
        })
    }

    /// Total of all toll charges, cents.
    pub fn toll_revenue_cents(&self) -> i64 {
        self.events
            .iter()
            .map(|e| match e.kind {
                EventKind::TollCharged { cents, .. } => cents,
                _ => 0,
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_jsonl() {
        let log = EventLog {
            horizon: 100,
            events: vec![
                Event {
                    time: 3,
                    kind: EventKind::LinkEnter {
                        vehicle: VehicleId::Sav(2),
                        link: LinkId(7),
                        automated: true,
                    },
                },
                Event {
                    time: 4,
                    kind: EventKind::TollCharged {
                        agent: AgentId(1),
                        link: None,
                        cents: 25,
                    },
                },
                Event {
                    time: 9,
                    kind: EventKind::Stuck {
                        agent: AgentId(1),
                        vehicle: Some(VehicleId::Private(AgentId(1))),
                        link: Some(LinkId(3)),
                    },
                },
            ],
        };
        let mut buf = Vec::new();
        log.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with(r#"{"time":3,"type":"link_enter""#));
        assert_eq!(EventLog::read_jsonl(buf.as_slice()).unwrap(), log);
        assert_eq!(log.toll_revenue_cents(), 25);
        assert!(EventLog::read_jsonl("".as_bytes()).is_err());
    }
}
