//! Weather-condition similarity weights.
//!
//! Raw airport condition strings are mapped to three groups, each carrying a
//! similarity weight `S`. Overcast intervals weigh most because metered
//! consumption of solar and non-solar customers is then directly comparable.
//! The per-day weight `S̄_d` is the mean of `S_t` over the day's daytime
//! intervals only.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, FixedOffset};

use crate::error::{Error, Result};
use crate::model::Calendar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    Rainy,
    Cloudy,
    Fair,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::Rainy, Group::Cloudy, Group::Fair];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Rainy => "Rainy",
            Group::Cloudy => "Cloudy",
            Group::Fair => "Fair",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rainy" => Ok(Group::Rainy),
            "cloudy" => Ok(Group::Cloudy),
            "fair" => Ok(Group::Fair),
            other => Err(format!("unknown weather group {other:?}")),
        }
    }
}

/// Condition strings of the reference airport station and their groups.
const DEFAULT_CONDITIONS: &[(&str, Group)] = &[
    ("Heavy Rain", Group::Rainy),
    ("Rain", Group::Rainy),
    ("Light Rain", Group::Cloudy),
    ("Cloudy", Group::Cloudy),
    ("Mostly Cloudy", Group::Cloudy),
    ("Partly Cloudy", Group::Cloudy),
    ("Fog", Group::Cloudy),
    ("Shallow Fog", Group::Cloudy),
    ("Patches of Fog", Group::Cloudy),
    ("Mist", Group::Cloudy),
    ("Haze", Group::Cloudy),
    ("Light Drizzle", Group::Cloudy),
    ("Wintry Mix", Group::Cloudy),
    ("Smoke", Group::Cloudy),
    ("Heavy Thunder-Storm", Group::Cloudy),
    ("Fair", Group::Fair),
    ("Light Snow", Group::Fair),
    ("Windy", Group::Fair),
    ("Thunder", Group::Fair),
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupWeights {
    pub rainy: f64,
    pub cloudy: f64,
    pub fair: f64,
}

impl Default for GroupWeights {
    fn default() -> Self {
        GroupWeights {
            rainy: 1.0,
            cloudy: 0.1,
            fair: 0.001,
        }
    }
}

impl GroupWeights {
    pub fn validate(&self) -> Result<()> {
        let all_positive = [self.rainy, self.cloudy, self.fair]
            .iter()
            .all(|w| w.is_finite() && *w > 0.0);
        if !all_positive {
            return Err(Error::Config("similarity weights must be positive".into()));
        }
        if self.rainy < self.cloudy || self.cloudy < self.fair {
            return Err(Error::Config(
                "similarity weights must not increase from Rainy to Fair".into(),
            ));
        }
        Ok(())
    }

    pub fn of(&self, g: Group) -> f64 {
        match g {
            Group::Rainy => self.rainy,
            Group::Cloudy => self.cloudy,
            Group::Fair => self.fair,
        }
    }

    pub fn min(&self) -> f64 {
        self.rainy.min(self.cloudy).min(self.fair)
    }

    pub fn max(&self) -> f64 {
        self.rainy.max(self.cloudy).max(self.fair)
    }
}

fn normalize(raw: &str) -> String {
    raw.trim().to_lowercase()
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeatherTable {
    mapping: HashMap<String, Group>,
    weights: GroupWeights,
    unknown_group: Option<Group>,
}

/// Result of a condition lookup.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mapped {
    pub group: Group,
    /// True when the condition was unknown and the fallback group was used.
    pub fallback: bool,
}

impl WeatherTable {
    pub fn new(weights: GroupWeights) -> Result<Self> {
        weights.validate()?;
        let mapping = DEFAULT_CONDITIONS
            .iter()
            .map(|(s, g)| (normalize(s), *g))
            .collect();
        Ok(WeatherTable {
            mapping,
            weights,
            unknown_group: None,
        })
    }

    pub fn set_condition(&mut self, raw: &str, group: Group) {
        self.mapping.insert(normalize(raw), group);
    }

    pub fn set_unknown_group(&mut self, group: Option<Group>) {
        self.unknown_group = group;
    }

    pub fn weights(&self) -> &GroupWeights {
        &self.weights
    }

    pub fn weight(&self, g: Group) -> f64 {
        self.weights.of(g)
    }

    /// Case-insensitive lookup on the trimmed string.
    pub fn lookup(&self, raw: &str) -> Result<Mapped> {
        match self.mapping.get(&normalize(raw)) {
            Some(&group) => Ok(Mapped {
                group,
                fallback: false,
            }),
            None => match self.unknown_group {
                Some(group) => Ok(Mapped {
                    group,
                    fallback: true,
                }),
                None => Err(Error::UnknownCondition(raw.trim().to_string())),
            },
        }
    }
}

impl Default for WeatherTable {
    fn default() -> Self {
        WeatherTable::new(GroupWeights::default()).expect("default weights are valid")
    }
}

pub fn map_condition(raw: &str, table: &WeatherTable) -> Result<Group> {
    table.lookup(raw).map(|m| m.group)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeatherObservation {
    pub timestamp: DateTime<FixedOffset>,
    pub condition: String,
    pub daylight: Option<bool>,
}

/// For every calendar interval, the index (into `sorted`) of the most recent
/// observation at or before the interval start; intervals before the first
/// observation take the first one.
fn step_hold(sorted: &[&WeatherObservation], calendar: &Calendar) -> Vec<usize> {
    let mut out = Vec::with_capacity(calendar.n_intervals());
    let mut k = 0usize;
    for t in 0..calendar.n_intervals() {
        let ts = calendar.timestamp(t);
        while k + 1 < sorted.len() && sorted[k + 1].timestamp <= ts {
            k += 1;
        }
        out.push(k);
    }
    out
}

fn sorted_observations(observations: &[WeatherObservation]) -> Vec<&WeatherObservation> {
    let mut sorted: Vec<&WeatherObservation> = observations.iter().collect();
    sorted.sort_by_key(|o| o.timestamp);
    sorted
}

/// Per-interval daylight flags from the weather file, when every observation
/// carries one. Uses the same step-hold assignment as the weights.
pub fn daylight_flags(observations: &[WeatherObservation], calendar: &Calendar) -> Option<Vec<bool>> {
    if observations.is_empty() || observations.iter().any(|o| o.daylight.is_none()) {
        return None;
    }
    let sorted = sorted_observations(observations);
    Some(
        step_hold(&sorted, calendar)
            .into_iter()
            .map(|k| sorted[k].daylight.unwrap_or(false))
            .collect(),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightSeries {
    /// `S_t` per calendar interval.
    pub values: Vec<f64>,
    pub groups: Vec<Group>,
    /// Raw condition held at each interval.
    pub conditions: Vec<String>,
    /// Observations mapped through the unknown-condition fallback.
    pub unknown_conditions: usize,
}

pub fn interval_weights(
    observations: &[WeatherObservation],
    calendar: &Calendar,
    table: &WeatherTable,
) -> Result<WeightSeries> {
    let mut covered = vec![false; calendar.n_days()];
    let step = calendar.interval_minutes() as i64 * 60;
    for o in observations {
        let secs = (o.timestamp - calendar.start()).num_seconds();
        if secs < 0 {
            continue;
        }
        let t = (secs / step) as usize;
        if t < calendar.n_intervals() {
            covered[calendar.day_of(t)] = true;
        }
    }
    let missing: Vec<String> = covered
        .iter()
        .enumerate()
        .filter(|(_, &c)| !c)
        .map(|(d, _)| calendar.days()[d].date.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::WeatherCoverage(missing));
    }

    let sorted = sorted_observations(observations);
    let mut mapped = Vec::with_capacity(sorted.len());
    let mut unknown = 0usize;
    for o in &sorted {
        let m = table.lookup(&o.condition)?;
        if m.fallback {
            unknown += 1;
        }
        mapped.push(m.group);
    }

    let held = step_hold(&sorted, calendar);
    let groups: Vec<Group> = held.iter().map(|&k| mapped[k]).collect();
    Ok(WeightSeries {
        values: groups.iter().map(|&g| table.weight(g)).collect(),
        conditions: held
            .iter()
            .map(|&k| sorted[k].condition.trim().to_string())
            .collect(),
        groups,
        unknown_conditions: unknown,
    })
}

/// Daily averaged similarity weight `S̄_d`, one per calendar day.
#[derive(Clone, Debug, PartialEq)]
pub struct DailyWeight {
    pub values: Vec<f64>,
}

impl DailyWeight {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Multiplies every day by `c`.
    pub fn scaled(&self, c: f64) -> DailyWeight {
        DailyWeight {
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

pub fn daily_avg_weight(weights: &WeightSeries, calendar: &Calendar) -> Result<DailyWeight> {
    if weights.values.len() != calendar.n_intervals() {
        return Err(Error::Alignment(format!(
            "{} weights for {} intervals",
            weights.values.len(),
            calendar.n_intervals()
        )));
    }
    calendar
        .days()
        .iter()
        .enumerate()
        .map(|(d, day)| {
            let m = day.daytime_len();
            if m == 0 {
                return Err(Error::DegenerateDay {
                    day: d,
                    date: day.date.to_string(),
                });
            }
            let sum: f64 = weights.values[day.daytime.clone()].iter().sum();
            Ok(sum / m as f64)
        })
        .collect::<Result<Vec<_>>>()
        .map(|values| DailyWeight { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_calendar, parse_timestamp, DaytimeSpec};
    use chrono::Duration;

    fn day_calendar(n: usize) -> Calendar {
        let start = parse_timestamp("2023-06-01T00:00:00-07:00").unwrap();
        build_calendar(start, n, 60, &DaytimeSpec::default()).unwrap()
    }

    fn obs(cal: &Calendar, hour: i64, cond: &str) -> WeatherObservation {
        WeatherObservation {
            timestamp: cal.start() + Duration::hours(hour),
            condition: cond.into(),
            daylight: None,
        }
    }

    #[test]
    fn table_groups() {
        let t = WeatherTable::default();
        assert_eq!(map_condition("Heavy Rain", &t).unwrap(), Group::Rainy);
        assert_eq!(map_condition("Light Snow", &t).unwrap(), Group::Fair);
        assert_eq!(map_condition("  mostly CLOUDY ", &t).unwrap(), Group::Cloudy);
        let err = map_condition("Volcanic Ash", &t).unwrap_err();
        assert!(matches!(err, Error::UnknownCondition(ref s) if s == "Volcanic Ash"));
    }

    #[test]
    fn unknown_fallback_is_counted() {
        let mut t = WeatherTable::default();
        t.set_unknown_group(Some(Group::Cloudy));
        let cal = day_calendar(24);
        let o = vec![obs(&cal, 0, "Volcanic Ash"), obs(&cal, 6, "Fair")];
        let w = interval_weights(&o, &cal, &t).unwrap();
        assert_eq!(w.unknown_conditions, 1);
        assert_eq!(w.values[0], 0.1);
        assert_eq!(w.values[6], 0.001);
    }

    #[test]
    fn overrides_take_precedence() {
        let mut t = WeatherTable::default();
        t.set_condition("light snow", Group::Cloudy);
        assert_eq!(map_condition("Light Snow", &t).unwrap(), Group::Cloudy);
    }

    #[test]
    fn weights_validated() {
        assert!(WeatherTable::new(GroupWeights {
            rainy: 0.1,
            cloudy: 1.0,
            fair: 0.001
        })
        .is_err());
        assert!(WeatherTable::new(GroupWeights {
            rainy: 1.0,
            cloudy: 0.1,
            fair: 0.0
        })
        .is_err());
    }

    #[test]
    fn positional_hourly_weights() {
        let cal = day_calendar(24);
        let conds = ["Rain", "Cloudy", "Fair"];
        let o: Vec<_> = (0..24).map(|h| obs(&cal, h, conds[h as usize % 3])).collect();
        let w = interval_weights(&o, &cal, &WeatherTable::default()).unwrap();
        for t in 0..24 {
            let expect = [1.0, 0.1, 0.001][t % 3];
            assert_eq!(w.values[t], expect);
        }
    }

    #[test]
    fn single_observation_backfills() {
        let cal = day_calendar(24);
        let w = interval_weights(&[obs(&cal, 6, "Rain")], &cal, &WeatherTable::default()).unwrap();
        assert!(w.values.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn step_hold_switches_at_observation() {
        let cal = day_calendar(24);
        let o = vec![obs(&cal, 12, "Rain"), obs(&cal, 6, "Fair")];
        let w = interval_weights(&o, &cal, &WeatherTable::default()).unwrap();
        for t in 6..12 {
            assert_eq!(w.values[t], 0.001);
        }
        for t in 12..24 {
            assert_eq!(w.values[t], 1.0);
        }
        assert_eq!(w.conditions[13], "Rain");
    }

    #[test]
    fn uncovered_day_lists_dates() {
        let cal = day_calendar(72);
        let o = vec![obs(&cal, 1, "Rain"), obs(&cal, 50, "Rain")];
        let err = interval_weights(&o, &cal, &WeatherTable::default()).unwrap_err();
        match err {
            Error::WeatherCoverage(days) => assert_eq!(days, vec!["2023-06-02".to_string()]),
            e => panic!("{e}"),
        }
    }

    fn series(values: Vec<f64>) -> WeightSeries {
        let n = values.len();
        WeightSeries {
            values,
            groups: vec![Group::Fair; n],
            conditions: vec![String::new(); n],
            unknown_conditions: 0,
        }
    }

    fn flagged_calendar(flags: Vec<bool>) -> Calendar {
        let start = parse_timestamp("2023-06-01T00:00:00-07:00").unwrap();
        build_calendar(start, flags.len(), 60, &DaytimeSpec::Flags(flags)).unwrap()
    }

    #[test]
    fn daily_mean_over_daytime_only() {
        let mut flags = vec![false; 24];
        flags[10..13].iter_mut().for_each(|f| *f = true);
        let cal = flagged_calendar(flags);
        let mut v = vec![1.0; 24];
        v[10] = 1.0;
        v[11] = 0.1;
        v[12] = 0.001;
        let d = daily_avg_weight(&series(v), &cal).unwrap();
        assert!((d.values[0] - 1.101 / 3.0).abs() < 1e-9);
        assert!((d.values[0] - 0.367).abs() < 1e-9);

        let mut flags = vec![false; 24];
        flags[8..12].iter_mut().for_each(|f| *f = true);
        let cal = flagged_calendar(flags);
        let mut v = vec![0.001; 24];
        v[8] = 1.0;
        v[9] = 1.0;
        v[10] = 0.1;
        v[11] = 0.1;
        let d = daily_avg_weight(&series(v), &cal).unwrap();
        assert!((d.values[0] - 0.55).abs() < 1e-9);
    }

    #[test]
    fn all_fair_day_is_fair_weight() {
        for m in [1usize, 5, 14] {
            let mut flags = vec![false; 24];
            flags[6..6 + m].iter_mut().for_each(|f| *f = true);
            let cal = flagged_calendar(flags);
            let d = daily_avg_weight(&series(vec![0.001; 24]), &cal).unwrap();
            assert!((d.values[0] - 0.001).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_day_errors() {
        let mut flags = vec![false; 48];
        flags[30] = true;
        let cal = flagged_calendar(flags);
        let err = daily_avg_weight(&series(vec![1.0; 48]), &cal).unwrap_err();
        assert!(matches!(err, Error::DegenerateDay { day: 0, .. }));
    }

    #[test]
    fn daylight_flags_need_every_observation() {
        let cal = day_calendar(24);
        let mut a = obs(&cal, 0, "Rain");
        a.daylight = Some(false);
        let mut b = obs(&cal, 7, "Rain");
        b.daylight = Some(true);
        let mut c = obs(&cal, 19, "Rain");
        c.daylight = Some(false);
        let flags = daylight_flags(&[a.clone(), b.clone(), c], &cal).unwrap();
        assert_eq!(flags.iter().filter(|&&f| f).count(), 12);
        assert!(daylight_flags(&[a, obs(&cal, 3, "Rain")], &cal).is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn conds() -> impl Strategy<Value = &'static str> {
            prop_oneof![Just("Rain"), Just("Cloudy"), Just("Fair"), Just("Fog"), Just("Windy")]
        }

        proptest! {
            #[test]
            fn constant_condition_gives_constant_daily_weight(c in conds(), days in 1usize..5) {
                let cal = day_calendar(24 * days);
                let o: Vec<_> = (0..24 * days as i64).step_by(3).map(|h| obs(&cal, h, c)).collect();
                let t = WeatherTable::default();
                let d = daily_avg_weight(&interval_weights(&o, &cal, &t).unwrap(), &cal).unwrap();
                let first = d.values[0];
                prop_assert!(d.values.iter().all(|&v| v == first));
                prop_assert!(first >= t.weights().min() && first <= t.weights().max());
            }

            #[test]
            fn night_weights_never_matter(
                day in proptest::collection::vec(conds(), 24),
                night in proptest::collection::vec(conds(), 24),
            ) {
                let cal = day_calendar(24);
                let t = WeatherTable::default();
                let mixed: Vec<_> = (0..24)
                    .map(|h| obs(&cal, h as i64, if cal.is_daytime(h) { day[h] } else { night[h] }))
                    .collect();
                let base: Vec<_> = (0..24).map(|h| obs(&cal, h as i64, day[h])).collect();
                let a = daily_avg_weight(&interval_weights(&mixed, &cal, &t).unwrap(), &cal).unwrap();
                let b = daily_avg_weight(&interval_weights(&base, &cal, &t).unwrap(), &cal).unwrap();
                prop_assert_eq!(a, b);
            }

            #[test]
            fn rainier_interval_raises_daily_weight(
                day in proptest::collection::vec(prop_oneof![Just("Cloudy"), Just("Fair")], 24),
                h in 6usize..20,
            ) {
                let cal = day_calendar(24);
                let t = WeatherTable::default();
                let before: Vec<_> = (0..24).map(|k| obs(&cal, k as i64, day[k])).collect();
                let mut after = before.clone();
                after[h].condition = "Rain".into();
                let a = daily_avg_weight(&interval_weights(&before, &cal, &t).unwrap(), &cal).unwrap();
                let b = daily_avg_weight(&interval_weights(&after, &cal, &t).unwrap(), &cal).unwrap();
                prop_assert!(b.values[0] > a.values[0]);
            }
        }
    }
}
