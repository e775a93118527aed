//! Utility of executed plans.

use serde::{Deserialize, Serialize};

use crate::demand::{ActivityKind, ActivityType, Mode, Plan};
use crate::dispatch::Tariff;
use crate::error::{Error, Result};
use crate::mobsim::{ExecutedDay, ExecutedTrip};
use crate::network::{METERS_PER_MILE, SECONDS_PER_HOUR};
use crate::routing::CostParams;

const DAY: u32 = 24 * 3600;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    pub mode: Mode,
    /// Alternative specific constant, utils per trip.
    pub asc: f64,
    /// Marginal utility of travel time, utils per hour.
    pub beta_time: f64,
    /// Out-of-pocket vehicle cost, dollars per mile.
    #[serde(default)]
    pub distance_rate: f64,
    /// Fleet tariff; overrides the scenario tariff when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tariff: Option<Tariff>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub name: String,
    /// Marginal utility of performing an activity, utils per hour.
    pub beta_act: f64,
    /// Marginal utility of money, utils per dollar.
    pub beta_money: f64,
    /// Penalty for waiting before opening on top of the foregone activity
    /// utility, utils per hour.
    pub early_penalty: f64,
    /// Penalty for starting after the latest start time, utils per hour.
    pub late_penalty: f64,
    /// Zero-utility duration is `t* * exp(-zero_utility_scale / t*)`, hours.
    pub zero_utility_scale: f64,
    /// Score of a plan that did not finish within the simulated day.
    pub stuck_score: f64,
    /// Score of an activity with no effective duration. Defaults to
    /// `-beta_act * t*`, the value of the linear extension below the
    /// zero-utility duration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empty_activity_score: Option<f64>,
    pub modes: Vec<ModeParams>,
    pub activities: Vec<ActivityType>,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig::vtts_target()
    }
}

fn mode(mode: Mode, asc: f64, beta_time: f64, distance_rate: f64) -> ModeParams {
    ModeParams {
        mode,
        asc,
        beta_time,
        distance_rate,
        tariff: None,
    }
}

impl ScoringConfig {
    pub const PRESETS: [&'static str; 2] = ["vtts-target", "table-literal"];

    /// Default parameters. Car travellers value time at $18/h and AV or SAV
    /// passengers at $9/h.
    pub fn vtts_target() -> Self {
        ScoringConfig {
            name: "vtts-target".into(),
            beta_act: 14.22,
            beta_money: 0.79,
            early_penalty: 0.0,
            late_penalty: 12.0,
            zero_utility_scale: 10.0,
            stuck_score: -100.0,
            empty_activity_score: None,
            modes: vec![
                mode(Mode::Car, -0.1, 0.0, 0.30),
                mode(Mode::Pt, -1.5, -0.36, 0.0),
                mode(Mode::WalkBike, -0.2, 0.0, 0.0),
                mode(Mode::Av, 0.0, 7.11, 0.20),
                mode(Mode::Sav, 0.0, 7.11, 0.0),
            ],
            activities: ActivityType::defaults(),
        }
    }

    /// Mode constants and travel-time utilities exactly as tabulated, with
    /// AV and SAV time at +0.48 utils/h.
    pub fn table_literal() -> Self {
        let mut c = ScoringConfig::vtts_target();
        c.name = "table-literal".into();
        for m in &mut c.modes {
            if m.mode.is_automated() {
                m.beta_time = 0.48;
            }
        }
        c
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "vtts-target" => Ok(ScoringConfig::vtts_target()),
            "table-literal" => Ok(ScoringConfig::table_literal()),
            other => Err(Error::Config(format!("unknown scoring preset `{other}`"))),
        }
    }

    pub fn mode(&self, mode: Mode) -> &ModeParams {
        self.modes
            .iter()
            .find(|m| m.mode == mode)
            .expect("validated config has every mode")
    }

    pub fn activity(&self, kind: ActivityKind) -> &ActivityType {
        self.activities
            .iter()
            .find(|a| a.kind == kind)
            .expect("validated config has every activity type")
    }

    /// Link cost parameters for routing a vehicle of `mode`.
    pub fn cost_params(&self, mode: Mode) -> CostParams {
        let p = self.mode(mode);
        CostParams {
            time_utils_per_hour: self.beta_act - p.beta_time,
            money_utils_per_dollar: self.beta_money,
            distance_dollars_per_mile: p.distance_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta_money.is_finite() && self.beta_money > 0.0) {
            return Err(Error::ZeroMoneyUtility);
        }
        if !(self.beta_act.is_finite() && self.beta_act > 0.0) {
            return Err(Error::OutOfRange {
                what: "beta_act",
                value: self.beta_act,
            });
        }
        for (what, v) in [
            ("early penalty", self.early_penalty),
            ("late penalty", self.late_penalty),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::OutOfRange { what, value: v });
            }
        }
        if !(self.zero_utility_scale.is_finite() && self.zero_utility_scale > 0.0) {
            return Err(Error::OutOfRange {
                what: "zero utility scale",
                value: self.zero_utility_scale,
            });
        }
        if !self.stuck_score.is_finite() || self.empty_activity_score.is_some_and(|s| !s.is_finite()) {
            return Err(Error::Config("penalty scores must be finite".into()));
        }
        for m in Mode::ALL {
            let n = self.modes.iter().filter(|p| p.mode == m).count();
            if n != 1 {
                return Err(Error::Config(format!(
                    "mode {} has {n} parameter sets, expected one",
                    m.as_str()
                )));
            }
        }
        for p in &self.modes {
            if ![p.asc, p.beta_time, p.distance_rate].iter().all(|v| v.is_finite()) || p.distance_rate < 0.0 {
                return Err(Error::Config(format!("invalid parameters for mode {}", p.mode.as_str())));
            }
            if let Some(t) = &p.tariff {
                t.validate()?;
            }
        }
        for k in ActivityKind::ALL {
            let n = self.activities.iter().filter(|a| a.kind == k).count();
            if n != 1 {
                return Err(Error::Config(format!("activity {k:?} has {n} definitions, expected one")));
            }
        }
        for a in &self.activities {
            a.validate()?;
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ScoringConfig = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Duration at which an activity of typical duration `t*` hours yields
    /// zero utility, hours.
    pub fn zero_utility_duration(&self, typical: f64) -> f64 {
        typical * (-self.zero_utility_scale / typical).exp()
    }
}

/// Utility of one trip of `hours` travel time costing `dollars`.
pub fn score_trip(params: &ModeParams, beta_money: f64, hours: f64, dollars: f64) -> Result<f64> {
    if !(hours >= 0.0) {
        return Err(Error::OutOfRange {
            what: "travel time",
            value: hours,
        });
    }
    if !(dollars >= 0.0) {
        return Err(Error::OutOfRange {
            what: "monetary cost",
            value: dollars,
        });
    }
    Ok(params.asc + params.beta_time * hours - beta_money * dollars)
}

/// Utility of performing an activity for `hours` of effective duration.
///
/// Logarithmic above the zero-utility duration `t0` and continued linearly
/// with the slope at `t0` below it, so very short stays stay bounded.
pub fn score_activity(hours: f64, ty: &ActivityType, config: &ScoringConfig) -> f64 {
    let typical = ty.typical_duration;
    let full = config.beta_act * typical;
    if !(hours > 0.0) {
        return config.empty_activity_score.unwrap_or(-full);
    }
    let t0 = config.zero_utility_duration(typical);
    if hours >= t0 {
        full * (hours / t0).ln()
    } else {
        full * (hours - t0) / t0
    }
}

/// Penalty for an activity entered at `arrival` and left at `departure`,
/// seconds since midnight. Waiting before opening is charged at the early
/// rate and starting after the latest start at the late rate.
pub fn schedule_penalty(arrival: u32, departure: u32, ty: &ActivityType, config: &ScoringConfig) -> f64 {
    let mut penalty = 0.0;
    if let Some(open) = ty.opening {
        let wait = open.min(departure).saturating_sub(arrival);
        penalty -= config.early_penalty * f64::from(wait) / SECONDS_PER_HOUR;
    }
    if let Some(latest) = ty.latest_start {
        let late = arrival.saturating_sub(latest);
        penalty -= config.late_penalty * f64::from(late) / SECONDS_PER_HOUR;
    }
    penalty
}

/// Time of `[start, end)` inside the activity's opening hours, seconds.
pub fn effective_duration(start: u32, end: u32, ty: &ActivityType) -> u32 {
    let from = ty.opening.map_or(start, |o| start.max(o));
    let to = ty.closing.map_or(end, |c| end.min(c));
    to.saturating_sub(from)
}

/// Out-of-pocket cost of an executed trip, dollars.
pub fn trip_cost(trip: &ExecutedTrip, params: &ModeParams) -> f64 {
    params.distance_rate * trip.private_distance / METERS_PER_MILE + (trip.toll_cents + trip.fare_cents) as f64 / 100.0
}

/// Utility of an executed day. The first and last Home activities are
/// merged into one activity wrapping around midnight.
pub fn score_plan(plan: &Plan, day: &ExecutedDay, config: &ScoringConfig) -> f64 {
    let n = plan.activities.len();
    let complete = day.trips.len() == plan.trips.len()
        && day.trips.iter().all(|t| t.arrive.is_some())
        && day.starts.len() + 1 >= n
        && day.ends.len() + 1 >= n;
    if day.stuck || !complete {
        return config.stuck_score;
    }
    let hours = |s: u32| f64::from(s) / SECONDS_PER_HOUR;
    let mut score = 0.0;

    if n == 1 {
        let ty = config.activity(plan.activities[0].kind);
        return score_activity(hours(DAY), ty, config);
    }
    let first = &plan.activities[0];
    let last = &plan.activities[n - 1];
    let first_end = day.ends[0];
    let last_start = day.starts[n - 2];
    if first.kind == last.kind {
        let span = (i64::from(first_end) + i64::from(DAY) - i64::from(last_start)).max(0) as u32;
        score += score_activity(hours(span), config.activity(first.kind), config);
    } else {
        score += score_activity(hours(first_end), config.activity(first.kind), config);
        let span = DAY.saturating_sub(last_start);
        score += score_activity(hours(span), config.activity(last.kind), config);
    }
    for i in 1..n - 1 {
        let ty = config.activity(plan.activities[i].kind);
        let (start, end) = (day.starts[i - 1], day.ends[i]);
        score += score_activity(hours(effective_duration(start, end, ty)), ty, config);
        score += schedule_penalty(start, end, ty, config);
    }
    for trip in &day.trips {
        let params = config.mode(trip.mode);
        let t = trip.travel_time().unwrap_or(0);
        score += score_trip(params, config.beta_money, hours(t), trip_cost(trip, params))
            .expect("executed trips have nonnegative time and cost");
    }
    score
}

/// Value of travel time savings, dollars per hour.
pub fn vtts(params: &ModeParams, config: &ScoringConfig) -> Result<f64> {
    if !(config.beta_money > 0.0) {
        return Err(Error::ZeroMoneyUtility);
    }
    Ok((config.beta_act - params.beta_time) / config.beta_money)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::{Activity, Trip, HOUR};
    use crate::network::LinkId;

    fn approx(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn trip_examples() {
        let c = ScoringConfig::vtts_target();
        approx(score_trip(c.mode(Mode::Car), c.beta_money, 0.0, 0.0).unwrap(), -0.1);
        approx(score_trip(c.mode(Mode::Pt), c.beta_money, 1.0, 0.0).unwrap(), -1.86);
        let lit = ScoringConfig::table_literal();
        let cost = 5.0 * lit.mode(Mode::Av).distance_rate;
        approx(score_trip(lit.mode(Mode::Av), lit.beta_money, 0.5, cost).unwrap(), -0.55);
        assert!(score_trip(c.mode(Mode::Car), c.beta_money, -0.1, 0.0).is_err());
    }

    #[test]
    fn activity_utility_shape() {
        let c = ScoringConfig::vtts_target();
        let work = c.activity(ActivityKind::Work).clone();
        let shop = c.activity(ActivityKind::Shopping).clone();
        let t0 = c.zero_utility_duration(7.0);
        approx(score_activity(t0, &work, &c), 0.0);

        // central difference around t*
        let h = 1e-6;
        let slope = (score_activity(7.0 + h, &work, &c) - score_activity(7.0 - h, &work, &c)) / (2.0 * h);
        assert!((slope - c.beta_act).abs() < 1e-6, "{slope}");

        let ratio = 1.7;
        let w = score_activity(ratio * c.zero_utility_duration(7.0), &work, &c);
        let s = score_activity(ratio * c.zero_utility_duration(1.0), &shop, &c);
        approx(w / s, 7.0);

        // continuous at t0 and bounded below
        approx(score_activity(t0 * (1.0 - 1e-12), &work, &c), 0.0);
        approx(score_activity(0.0, &work, &c), -c.beta_act * 7.0);
        let mut prev = f64::NEG_INFINITY;
        for k in 1..200 {
            let u = score_activity(k as f64 * 0.1, &work, &c);
            assert!(u > prev);
            prev = u;
        }
    }

    #[test]
    fn schedule_penalties() {
        let c = ScoringConfig::vtts_target();
        let mut work = c.activity(ActivityKind::Work).clone();
        work.latest_start = Some(8 * HOUR);
        approx(schedule_penalty(7 * HOUR, 15 * HOUR, &work, &c), 0.0);
        approx(schedule_penalty(9 * HOUR, 15 * HOUR, &work, &c), -12.0);
        // early arrival costs only the waited span
        assert_eq!(effective_duration(6 * HOUR, 15 * HOUR, &work), 8 * HOUR);
        approx(schedule_penalty(6 * HOUR, 15 * HOUR, &work, &c), 0.0);
        let shop = c.activity(ActivityKind::Shopping);
        assert_eq!(effective_duration(8 * HOUR, 9 * HOUR, shop), 0);
    }

    #[test]
    fn vtts_values() {
        let c = ScoringConfig::vtts_target();
        approx(vtts(c.mode(Mode::Car), &c).unwrap(), 18.0);
        approx(vtts(c.mode(Mode::Av), &c).unwrap(), 9.0);
        approx(vtts(c.mode(Mode::Sav), &c).unwrap(), 9.0);
        let mut same = c.mode(Mode::Car).clone();
        same.beta_time = c.beta_act;
        approx(vtts(&same, &c).unwrap(), 0.0);
        let mut broke = c.clone();
        broke.beta_money = 0.0;
        assert!(matches!(vtts(c.mode(Mode::Car), &broke), Err(Error::ZeroMoneyUtility)));
    }

    fn home_work_day() -> (Plan, ExecutedDay) {
        let act = |kind, end_time| Activity {
            kind,
            link: LinkId(0),
            end_time,
        };
        let trip = Trip {
            mode: Mode::Car,
            route: vec![],
        };
        let plan = Plan {
            activities: vec![
                act(ActivityKind::Home, Some(8 * HOUR)),
                act(ActivityKind::Work, Some(15 * HOUR)),
                act(ActivityKind::Home, None),
            ],
            trips: vec![trip.clone(), trip],
            score: None,
        };
        let t = |depart: u32| ExecutedTrip {
            mode: Mode::Car,
            depart,
            arrive: Some(depart),
            private_distance: 0.0,
            in_vehicle_distance: 0.0,
            toll_cents: 0,
            fare_cents: 0,
        };
        let day = ExecutedDay {
            starts: vec![8 * HOUR, 15 * HOUR],
            ends: vec![8 * HOUR, 15 * HOUR],
            trips: vec![t(8 * HOUR), t(15 * HOUR)],
            stuck: false,
        };
        (plan, day)
    }

    #[test]
    fn plan_score_sums_components() {
        let c = ScoringConfig::vtts_target();
        let (plan, day) = home_work_day();
        let expected = score_activity(17.0, c.activity(ActivityKind::Home), &c)
            + score_activity(7.0, c.activity(ActivityKind::Work), &c)
            - 0.2;
        approx(score_plan(&plan, &day, &c), expected);
        approx(score_plan(&plan, &day.clone(), &c), score_plan(&plan, &day, &c));

        let mut tolled = day.clone();
        tolled.trips[0].toll_cents = 100;
        approx(score_plan(&plan, &day, &c) - score_plan(&plan, &tolled, &c), 0.79);

        let mut driven = day.clone();
        driven.trips[1].private_distance = METERS_PER_MILE;
        approx(score_plan(&plan, &day, &c) - score_plan(&plan, &driven, &c), 0.79 * 0.30);

        let mut stuck = day;
        stuck.trips[1].arrive = None;
        approx(score_plan(&plan, &stuck, &c), -100.0);
    }

    #[test]
    fn presets_round_trip_through_toml() {
        for name in ScoringConfig::PRESETS {
            let c = ScoringConfig::preset(name).unwrap();
            c.validate().unwrap();
            let text = c.to_toml().unwrap();
            assert_eq!(ScoringConfig::from_toml(&text).unwrap(), c);
        }
        assert!(ScoringConfig::preset("other").is_err());
        let mut bad = ScoringConfig::vtts_target();
        bad.modes.pop();
        assert!(bad.validate().is_err());
    }
}
