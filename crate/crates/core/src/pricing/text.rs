//! Plain-text toll schedule files.
//!
//! A file opens with `key = value` header lines, starting with the scheme,
//! followed by a blank line and a CSV table:
//!
//! ```text
//! scheme = mcp
//! interval = 900
//! intervals = 96
//! cap_cents = 30
//!
//! link,interval,cents
//! l17,32,12
//! ```
//!
//! Facility tables list `link,start,end,cents`, distance tables
//! `start,end,cents_per_mile`, marginal-cost tables the nonzero
//! `link,interval,cents` cells and travel-time tables
//! `interval,sigma,cents_per_hour`. Links are written by name.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use super::schedule::{DistanceToll, FacilityToll, McpToll, SchemeKind, TimeWindow, TollSchedule, TravelTimeToll};
use crate::error::{Error, Result};
use crate::network::{LinkId, Network};

fn bad(reason: impl Into<String>) -> Error {
    Error::Malformed {
        what: "toll schedule",
        reason: reason.into(),
    }
}

impl TollSchedule {
    pub fn write_text<W: Write>(&self, network: &Network, mut w: W) -> Result<()> {
        writeln!(w, "scheme = {}", self.kind().as_str())?;
        let name = |l: &LinkId| network.link(*l).name.clone();
        let rows: Vec<Vec<String>> = match self {
            TollSchedule::None => {
                return Ok(());
            }
            TollSchedule::Facility(f) => {
                writeln!(w, "cents = {}\n\nlink,start,end,cents", f.cents)?;
                f.links
                    .iter()
                    .flat_map(|l| {
                        f.windows
                            .iter()
                            .map(move |win| vec![name(l), win.start.to_string(), win.end.to_string(), f.cents.to_string()])
                    })
                    .collect()
            }
            TollSchedule::Distance(d) => {
                writeln!(w, "cents_per_mile = {}\n\nstart,end,cents_per_mile", d.cents_per_mile)?;
                vec![vec![
                    d.window.start.to_string(),
                    d.window.end.to_string(),
                    d.cents_per_mile.to_string(),
                ]]
            }
            TollSchedule::Mcp(m) => {
                let n = m.tolls.values().map(Vec::len).max().unwrap_or(0);
                writeln!(
                    w,
                    "interval = {}\nintervals = {n}\ncap_cents = {}\n\nlink,interval,cents",
                    m.interval, m.cap_cents
                )?;
                m.tolls
                    .iter()
                    .flat_map(|(l, row)| {
                        row.iter()
                            .enumerate()
                            .filter(|(_, &c)| c != 0)
                            .map(move |(k, c)| vec![name(l), k.to_string(), c.to_string()])
                    })
                    .collect()
            }
            TollSchedule::TravelTime(t) => {
                writeln!(w, "interval = {}\nalpha = {:?}\n\ninterval,sigma,cents_per_hour", t.interval, t.alpha)?;
                t.sigma
                    .iter()
                    .zip(&t.cents_per_hour)
                    .enumerate()
                    .map(|(k, (s, c))| vec![k.to_string(), format!("{s:?}"), c.to_string()])
                    .collect()
            }
        };
        for r in rows {
            writeln!(w, "{}", r.join(","))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R, network: &Network) -> Result<Self> {
        let mut header = BTreeMap::new();
        let mut table: Vec<Vec<String>> = Vec::new();
        let mut in_table = false;
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if !in_table {
                if line.is_empty() {
                    in_table = true;
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("header line `{line}`")))?;
                header.insert(k.trim().to_string(), v.trim().to_string());
            } else if !line.is_empty() {
                table.push(line.split(',').map(|s| s.trim().to_string()).collect());
            }
        }
        let get = |k: &str| header.get(k).ok_or_else(|| bad(format!("missing `{k}`")));
        fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
            s.parse().map_err(|_| bad(format!("bad number `{s}`")))
        }
        let link = |s: &str| network.link_by_name(s).ok_or_else(|| Error::UnknownLink(s.to_string()));
        let rows = |width: usize| -> Result<&[Vec<String>]> {
            let body = table.get(1..).unwrap_or(&[]);
            match body.iter().find(|r| r.len() != width) {
                Some(r) => Err(bad(format!("row `{}` needs {width} fields", r.join(",")))),
                None => Ok(body),
            }
        };
        let schedule = match SchemeKind::parse(get("scheme")?)? {
            SchemeKind::None => TollSchedule::None,
            SchemeKind::Facility => {
                let cents = num(get("cents")?)?;
                let mut links = BTreeSet::new();
                let mut windows = Vec::new();
                for r in rows(4)? {
                    links.insert(link(&r[0])?);
                    let win = TimeWindow {
                        start: num(&r[1])?,
                        end: num(&r[2])?,
                    };
                    if !windows.contains(&win) {
                        windows.push(win);
                    }
                    if num::<i64>(&r[3])? != cents {
                        return Err(bad("facility rows disagree with the header charge"));
                    }
                }
                TollSchedule::Facility(FacilityToll { links, cents, windows })
            }
            SchemeKind::Distance => {
                let body = rows(3)?;
                let [r] = body else {
                    return Err(bad("distance schedule needs exactly one row"));
                };
                TollSchedule::Distance(DistanceToll {
                    cents_per_mile: num(get("cents_per_mile")?)?,
                    window: TimeWindow {
                        start: num(&r[0])?,
                        end: num(&r[1])?,
                    },
                })
            }
            SchemeKind::Mcp => {
                let interval: u32 = num(get("interval")?)?;
                let n: usize = num(get("intervals")?)?;
                let mut tolls: BTreeMap<LinkId, Vec<i64>> = BTreeMap::new();
                for r in rows(3)? {
                    let k: usize = num(&r[1])?;
                    if k >= n {
                        return Err(bad(format!("interval {k} beyond the {n} published")));
                    }
                    tolls.entry(link(&r[0])?).or_insert_with(|| vec![0; n])[k] = num(&r[2])?;
                }
                TollSchedule::Mcp(McpToll {
                    interval,
                    cap_cents: num(get("cap_cents")?)?,
                    tolls,
                })
            }
            SchemeKind::TravelTime => {
                let mut sigma = Vec::new();
                let mut published = Vec::new();
                for (k, r) in rows(3)?.iter().enumerate() {
                    if num::<usize>(&r[0])? != k {
                        return Err(bad("travel-time intervals must be consecutive from 0"));
                    }
                    sigma.push(num(&r[1])?);
                    published.push(num::<i64>(&r[2])?);
                }
                let t = TravelTimeToll::new(num(get("interval")?)?, num(get("alpha")?)?, sigma);
                if t.cents_per_hour != published {
                    return Err(bad("published rates disagree with alpha times sigma"));
                }
                TollSchedule::TravelTime(t)
            }
        };
        schedule.validate()?;
        Ok(schedule)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::pricing::{distance_schedule, facility_schedule};

    fn round_trip(s: &TollSchedule, net: &Network) -> TollSchedule {
        let mut buf = Vec::new();
        s.write_text(net, &mut buf).unwrap();
        TollSchedule::read_text(&buf[..], net).unwrap()
    }

    #[test]
    fn every_scheme_round_trips() {
        let net = fixtures::diamond().network;
        let links: BTreeSet<LinkId> = [LinkId(1), LinkId(3)].into();
        let mut tolls = BTreeMap::new();
        tolls.insert(LinkId(2), vec![0, 0, 14, 30, 0]);
        let schedules = [
            TollSchedule::None,
            facility_schedule(links, 0.2),
            distance_schedule(0.1),
            TollSchedule::Mcp(McpToll {
                interval: 900,
                cap_cents: 30,
                tolls,
            }),
            TollSchedule::TravelTime(TravelTimeToll::new(1800, 0.1, vec![0.0, 3.25, 1.0 / 3.0])),
        ];
        for s in &schedules {
            assert_eq!(&round_trip(s, &net), s);
        }
    }

    #[test]
    fn rejects_bad_files() {
        let net = fixtures::diamond().network;
        for text in [
            "scheme = toll\n",
            "scheme = mcp\ninterval = 900\nintervals = 4\ncap_cents = 30\n\nlink,interval,cents\nnowhere,1,5\n",
            "scheme = mcp\ninterval = 900\ncap_cents = 30\n\nlink,interval,cents\nl1,1\n",
            "scheme = distance\n\nstart,end,cents_per_mile\n0,10,5\n",
        ] {
            assert!(TollSchedule::read_text(text.as_bytes(), &net).is_err(), "{text}");
        }
    }
}
