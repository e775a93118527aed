//! Mobility simulation: queue-based network loading, teleported modes and
//! fleet trips, and the measurements taken from the resulting event log.

mod events;
mod measure;
mod sim;

pub use events::{Event, EventKind, EventLog, VehicleId, EVENTS_FORMAT_VERSION};
pub use measure::{
    executed_days, link_balances, measure_flows, travel_times, traversals, trip_travel_times, ExecutedDay,
    ExecutedTrip, FlowSeries, LinkBalance, MEASUREMENT_INTERVAL,
};
pub use sim::{simulate_day, DayInput, Fleet, MobsimConfig, DAY_HORIZON};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::{Activity, ActivityKind, Agent, AgentId, Mode, ModeSet, Plan, Trip, HOUR};
    use crate::dispatch::{Beeline, Tariff};
    use crate::fixtures;
    use crate::network::{LinkId, LinkRecord, Network, NodeRecord};
    use crate::pricing::{distance_schedule, facility_schedule, TollSchedule};
    use crate::routing::{FreeFlowTable, TravelTimes};

    /// Straight line of links `l0, l1, ...` along the x axis.
    fn line(specs: &[(f64, f64, f64, f64)]) -> Network {
        let mut x = 0.0;
        let mut nodes = vec![NodeRecord { id: "n0".into(), x, y: 0.0 }];
        let mut links = Vec::new();
        for (i, &(length_m, freespeed_ms, capacity_vph, lanes)) in specs.iter().enumerate() {
            x += length_m;
            nodes.push(NodeRecord {
                id: format!("n{}", i + 1),
                x,
                y: 0.0,
            });
            links.push(LinkRecord {
                id: format!("l{i}"),
                from: format!("n{i}"),
                to: format!("n{}", i + 1),
                length_m,
                freespeed_ms,
                capacity_vph,
                lanes,
            });
        }
        Network::build(nodes, links).unwrap()
    }

    fn one_trip(id: u32, mode: Mode, from: LinkId, to: LinkId, route: Vec<LinkId>, depart: u32) -> Agent {
        let plan = Plan {
            activities: vec![
                Activity {
                    kind: ActivityKind::Home,
                    link: from,
                    end_time: Some(depart),
                },
                Activity {
                    kind: ActivityKind::Work,
                    link: to,
                    end_time: Some(depart + 8 * HOUR),
                },
                Activity {
                    kind: ActivityKind::Home,
                    link: from,
                    end_time: None,
                },
            ],
            trips: vec![
                Trip { mode, route },
                Trip {
                    mode,
                    route: Vec::new(),
                },
            ],
            score: None,
        };
        Agent::new(AgentId(id), format!("a{id}"), ModeSet::new(&Mode::ALL), plan)
    }

    /// Postpones the walk home past the end of the day so that single-leg
    /// tests only see the outbound trip.
    fn outbound_only(mut a: Agent) -> Agent {
        let p = &mut a.plans[0];
        p.activities[1].end_time = Some(DAY_HORIZON + 1);
        p.trips[1].mode = Mode::WalkBike;
        a
    }

    fn run(net: &Network, agents: &[Agent], tolls: &TollSchedule, config: &MobsimConfig) -> EventLog {
        let tt = TravelTimes::free_flow(net, config.horizon);
        simulate_day(&DayInput {
            network: net,
            agents,
            tolls,
            fleet: None,
            travel_times: &tt,
            config,
        })
        .unwrap()
    }

    fn times_of(log: &EventLog, pred: impl Fn(&EventKind) -> bool) -> Vec<u32> {
        log.events.iter().filter(|e| pred(&e.kind)).map(|e| e.time).collect()
    }

    #[test]
    fn free_flow_single_link() {
        let net = line(&[(100.0, 10.0, 3600.0, 1.0), (1000.0, 10.0, 3600.0, 1.0)]);
        let a = outbound_only(one_trip(0, Mode::Car, LinkId(0), LinkId(1), vec![LinkId(1)], 1000));
        let log = run(&net, &[a], &TollSchedule::None, &MobsimConfig::default());
        let arrive = times_of(&log, |k| matches!(k, EventKind::Arrive { .. }));
        assert_eq!(arrive, [1000 + 100]);
        let days = executed_days(&log, &net, 1);
        assert_eq!(days[0].trips[0].travel_time(), Some(100));
        assert_eq!(days[0].trips[0].private_distance, 1000.0);
    }

    #[test]
    fn unit_capacity_spaces_exits() {
        // one vehicle per minute on l1
        let net = line(&[(100.0, 10.0, 3600.0, 1.0), (100.0, 10.0, 60.0, 1.0), (100.0, 10.0, 3600.0, 1.0)]);
        let agents: Vec<_> = (0..2)
            .map(|i| outbound_only(one_trip(i, Mode::Car, LinkId(0), LinkId(2), vec![LinkId(1), LinkId(2)], 0)))
            .collect();
        let log = run(&net, &agents, &TollSchedule::None, &MobsimConfig::default());
        let leaves = times_of(&log, |k| matches!(k, EventKind::LinkLeave { link: LinkId(1), .. }));
        assert_eq!(leaves.len(), 2);
        assert_eq!(leaves[1] - leaves[0], 60);
        assert_eq!(leaves[0], 10);
    }

    #[test]
    fn walk_teleport_one_km() {
        let net = line(&[(1000.0, 10.0, 3600.0, 1.0), (1000.0, 10.0, 3600.0, 1.0)]);
        let config = MobsimConfig {
            beeline_factor: 1.0,
            ..MobsimConfig::default()
        };
        let a = outbound_only(one_trip(0, Mode::WalkBike, LinkId(0), LinkId(1), vec![], 0));
        let log = run(&net, &[a], &TollSchedule::None, &config);
        assert_eq!(times_of(&log, |k| matches!(k, EventKind::Arrive { .. })), [12 * 60]);
        assert!(!log.events.iter().any(|e| matches!(e.kind, EventKind::LinkEnter { .. })));
    }

    #[test]
    fn storage_is_never_exceeded_and_vehicles_are_conserved() {
        // storage of the middle link: floor(15 / 7.5) = 2 vehicles
        let net = line(&[(100.0, 10.0, 36000.0, 5.0), (15.0, 1.0, 3600.0, 1.0), (100.0, 10.0, 360.0, 1.0)]);
        let agents: Vec<_> = (0..20)
            .map(|i| outbound_only(one_trip(i, Mode::Car, LinkId(0), LinkId(2), vec![LinkId(1), LinkId(2)], 0)))
            .collect();
        let config = MobsimConfig {
            horizon: 120,
            ..MobsimConfig::default()
        };
        let log = run(&net, &agents, &TollSchedule::None, &config);
        for (l, b) in link_balances(&log, &net).iter().enumerate() {
            assert_eq!(b.entries, b.exits + b.residue, "link {l}");
            assert!(b.peak_occupancy <= net.link(LinkId(l as u32)).storage_capacity);
        }
        let stuck = log.events.iter().filter(|e| matches!(e.kind, EventKind::Stuck { .. })).count();
        let arrived = log.events.iter().filter(|e| matches!(e.kind, EventKind::Arrive { .. })).count();
        assert_eq!(stuck + arrived, 20);
        assert!(stuck > 0);
    }

    #[test]
    fn automated_vehicles_raise_throughput() {
        let net = line(&[(100.0, 10.0, 36000.0, 5.0), (100.0, 10.0, 600.0, 5.0), (100.0, 10.0, 36000.0, 5.0)]);
        let served = |mode| {
            let agents: Vec<_> = (0..400)
                .map(|i| outbound_only(one_trip(i, mode, LinkId(0), LinkId(2), vec![LinkId(1), LinkId(2)], 0)))
                .collect();
            let log = run(&net, &agents, &TollSchedule::None, &MobsimConfig::default());
            let flows = measure_flows(&log, &net, MEASUREMENT_INTERVAL);
            // second interval: the queue is saturated for both modes
            flows.get(LinkId(1), 1).outflow
        };
        // one vehicle per interval is 12 veh/h of discretization
        let (car, av) = (served(Mode::Car), served(Mode::Av));
        assert!((car - 600.0).abs() <= 12.0, "{car}");
        assert!((av - 600.0 / 0.666).abs() <= 12.0, "{av}");
        assert!(av > car);
    }

    #[test]
    fn facility_and_distance_tolls_are_charged() {
        let net = line(&[(100.0, 10.0, 3600.0, 1.0), (1609.344, 10.0, 3600.0, 1.0)]);
        let a = outbound_only(one_trip(0, Mode::Car, LinkId(0), LinkId(1), vec![LinkId(1)], 8 * HOUR));
        let tolls = facility_schedule([LinkId(1)].into_iter().collect(), 0.20);
        let log = run(&net, std::slice::from_ref(&a), &tolls, &MobsimConfig::default());
        assert_eq!(log.toll_revenue_cents(), 20);
        let entry = log.events.iter().position(|e| matches!(e.kind, EventKind::LinkEnter { .. })).unwrap();
        assert!(matches!(log.events[entry + 1].kind, EventKind::TollCharged { link: Some(_), cents: 20, .. }));

        let log = run(&net, &[a], &distance_schedule(0.10), &MobsimConfig::default());
        assert_eq!(log.toll_revenue_cents(), 10);
        let arrive = log.events.iter().position(|e| matches!(e.kind, EventKind::Arrive { .. })).unwrap();
        assert!(matches!(log.events[arrive - 1].kind, EventKind::TollCharged { link: None, cents: 10, .. }));
    }

    #[test]
    fn shared_vehicle_serves_request() {
        let f = fixtures::corridor();
        let net = &f.network;
        let id = |n| net.link_by_name(n).unwrap();
        let rider = outbound_only(one_trip(0, Mode::Sav, id("h0"), id("w0"), vec![], 8 * HOUR));
        let table = FreeFlowTable::new(net);
        let tt = TravelTimes::free_flow(net, DAY_HORIZON);
        let tariff = Tariff {
            flat: 0.5,
            per_mile: 0.4,
            per_minute: 0.1,
        };
        let placements = [id("e1")];
        let config = MobsimConfig::default();
        let log = simulate_day(&DayInput {
            network: net,
            agents: &[rider],
            tolls: &TollSchedule::None,
            fleet: Some(Fleet {
                placements: &placements,
                tariff,
                estimate: &table,
            }),
            travel_times: &tt,
            config: &config,
        })
        .unwrap();
        let kinds: Vec<_> = log
            .events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::SavRequest { .. } => Some("request"),
                EventKind::SavAssign { .. } => Some("assign"),
                EventKind::SavPickup { .. } => Some("pickup"),
                EventKind::SavDropoff { .. } => Some("dropoff"),
                EventKind::Arrive { .. } => Some("arrive"),
                _ => None,
            })
            .collect();
        assert_eq!(kinds, ["request", "assign", "pickup", "dropoff", "arrive"]);
        // the vehicle parked on e1 drives back west and around to h0
        let empty: f64 = log
            .events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::SavEmptyDrive { link, .. } => Some(net.link(link).length),
                _ => None,
            })
            .sum();
        assert!(empty > 0.0);
        let days = executed_days(&log, net, 1);
        assert!(days[0].trips[0].fare_cents > 50);

        let beeline = Beeline {
            network: net,
            speed: 10.0,
        };
        let log2 = simulate_day(&DayInput {
            network: net,
            agents: &[outbound_only(one_trip(0, Mode::Sav, id("h0"), id("w0"), vec![], 8 * HOUR))],
            tolls: &TollSchedule::None,
            fleet: Some(Fleet {
                placements: &placements,
                tariff,
                estimate: &beeline,
            }),
            travel_times: &tt,
            config: &config,
        })
        .unwrap();
        assert_eq!(log2.events.len(), log.events.len());
    }

    #[test]
    fn activity_ends_wait_for_late_arrivals() {
        let net = line(&[(100.0, 10.0, 3600.0, 1.0), (1000.0, 1.0, 3600.0, 1.0)]);
        let mut a = one_trip(0, Mode::Car, LinkId(0), LinkId(1), vec![LinkId(1)], 0);
        a.plans[0].activities[1].end_time = Some(10);
        a.plans[0].trips[1].mode = Mode::WalkBike;
        a.plans[0].trips[0].mode = Mode::Car;
        let log = run(&net, &[a], &TollSchedule::None, &MobsimConfig::default());
        let ends = times_of(&log, |k| matches!(k, EventKind::ActEnd { .. }));
        assert_eq!(ends, [0, 1000]);
    }

    #[test]
    fn deterministic_replay() {
        let f = fixtures::grid();
        let s = crate::demand::generate_scenario(crate::demand::Preset::Base, 100, 3, &f.network, &f.locations)
            .unwrap();
        let tt = TravelTimes::free_flow(&f.network, DAY_HORIZON);
        let mut agents = s.agents;
        for a in &mut agents {
            let p = &mut a.plans[0];
            for i in 0..p.trips.len() {
                if p.trips[i].mode.is_private_vehicle() {
                    p.trips[i].route = crate::routing::route(
                        &f.network,
                        &tt,
                        &TollSchedule::None,
                        &crate::routing::CostParams::time_only(),
                        p.origin(i),
                        p.destination(i),
                        p.departure_time(i),
                    )
                    .unwrap();
                }
            }
        }
        let config = MobsimConfig::default();
        let a = run(&f.network, &agents, &TollSchedule::None, &config);
        let b = run(&f.network, &agents, &TollSchedule::None, &config);
        assert_eq!(a, b);
        let mut w = Vec::new();
        a.write_jsonl(&mut w).unwrap();
        assert_eq!(EventLog::read_jsonl(w.as_slice()).unwrap(), a);
        assert!(a.events.windows(2).all(|p| p[0].time <= p[1].time));
    }

    #[test]
    fn flows_from_counts() {
        let net = line(&[(100.0, 10.0, 36000.0, 5.0), (1000.0, 10.0, 36000.0, 5.0), (100.0, 10.0, 36000.0, 5.0)]);
        let agents: Vec<_> = (0..10)
            .map(|i| outbound_only(one_trip(i, Mode::Av, LinkId(0), LinkId(2), vec![LinkId(1), LinkId(2)], 10 * i)))
            .collect();
        let log = run(&net, &agents, &TollSchedule::None, &MobsimConfig::default());
        let flows = measure_flows(&log, &net, MEASUREMENT_INTERVAL);
        let o = flows.get(LinkId(1), 0);
        assert_eq!(o.users, 10);
        assert!((o.outflow - 120.0).abs() < 1e-9);
        assert_eq!(o.av_share, 1.0);
        // every vehicle spends 100 s on the 1 km link: 1000 vehicle-seconds
        assert!((o.density - 1000.0 / 300.0).abs() < 1e-9);
        let empty = flows.get(LinkId(1), 50);
        assert_eq!((empty.users, empty.outflow, empty.density), (0, 0.0, 0.0));
    }
}
