//! Shared data model: calendar, interval series, customer records and the
//! canonical sign convention (consumption ≤ 0, generation ≥ 0).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Duration, FixedOffset, NaiveDate, Timelike};

use crate::error::{DuplicateRow, Error, Result};
use crate::weather::WeatherObservation;

pub const MINUTES_PER_DAY: u32 = 24 * 60;

/// Per-month daytime window, minutes after local midnight, half-open `[start, end)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonthWindows {
    windows: [(u32, u32); 12],
}

impl MonthWindows {
    pub fn uniform(start_minute: u32, end_minute: u32) -> Result<Self> {
        let mut w = MonthWindows {
            windows: [(start_minute, end_minute); 12],
        };
        for month in 1..=12 {
            w.set(month, start_minute, end_minute)?;
        }
        Ok(w)
    }

    /// Override the window of one month (1-based).
    pub fn set(&mut self, month: u32, start_minute: u32, end_minute: u32) -> Result<()> {
        if !(1..=12).contains(&month) {
            return Err(Error::Config(format!("month {month} out of range 1..=12")));
        }
        if start_minute >= end_minute || end_minute > MINUTES_PER_DAY {
            return Err(Error::Config(format!(
                "daytime window {start_minute}..{end_minute} min is empty or crosses midnight"
            )));
        }
        self.windows[(month - 1) as usize] = (start_minute, end_minute);
        Ok(())
    }

    pub fn get(&self, month: u32) -> (u32, u32) {
        self.windows[(month - 1) as usize]
    }

    pub fn contains(&self, month: u32, minute_of_day: u32) -> bool {
        let (s, e) = self.get(month);
        minute_of_day >= s && minute_of_day < e
    }
}

impl Default for MonthWindows {
    fn default() -> Self {
        MonthWindows {
            windows: [(6 * 60, 20 * 60); 12],
        }
    }
}

/// How daytime intervals are determined.
#[derive(Clone, Debug, PartialEq)]
pub enum DaytimeSpec {
    /// An interval is daytime when its local start time falls in the month's window.
    Window(MonthWindows),
    /// Explicit per-interval daylight flags (e.g. from the weather file).
    Flags(Vec<bool>),
}

impl Default for DaytimeSpec {
    fn default() -> Self {
        DaytimeSpec::Window(MonthWindows::default())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Day {
    pub date: NaiveDate,
    pub intervals: Range<usize>,
    /// Contiguous daytime block; empty for a degenerate day.
    pub daytime: Range<usize>,
}

impl Day {
    /// Number of daytime intervals (m_d).
    pub fn daytime_len(&self) -> usize {
        self.daytime.len()
    }
}

/// Fixed-step interval grid partitioned into local days.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Calendar {
    start: DateTime<FixedOffset>,
    interval_minutes: u32,
    day_index: Vec<u32>,
    daytime: Vec<bool>,
    days: Vec<Day>,
    degenerate_days: Vec<usize>,
}

/// Builds the calendar and its daytime mask.
pub fn build_calendar(
    start: DateTime<FixedOffset>,
    n_intervals: usize,
    interval_minutes: u32,
    daytime: &DaytimeSpec,
) -> Result<Calendar> {
    if interval_minutes == 0 || MINUTES_PER_DAY % interval_minutes != 0 {
        return Err(Error::Config(format!(
            "interval length {interval_minutes} min does not divide 24 h"
        )));
    }
    if n_intervals == 0 {
        return Err(Error::Config("calendar needs at least one interval".into()));
    }
    if let DaytimeSpec::Flags(flags) = daytime {
        if flags.len() != n_intervals {
            return Err(Error::Config(format!(
                "{} daylight flags for {} intervals",
                flags.len(),
                n_intervals
            )));
        }
    }

    let step = Duration::minutes(interval_minutes as i64);
    let mut day_index = Vec::with_capacity(n_intervals);
    let mut mask = Vec::with_capacity(n_intervals);
    let mut days: Vec<Day> = Vec::new();
    let mut ts = start;
    for t in 0..n_intervals {
        let date = ts.date_naive();
        if days.last().map_or(true, |d| d.date != date) {
            days.push(Day {
                date,
                intervals: t..t,
                daytime: t..t,
            });
        }
        let d = days.len() - 1;
        days[d].intervals.end = t + 1;
        day_index.push(d as u32);

        let is_day = match daytime {
            DaytimeSpec::Window(w) => w.contains(ts.month(), ts.hour() * 60 + ts.minute()),
            DaytimeSpec::Flags(f) => f[t],
        };
        mask.push(is_day);
        ts += step;
    }

    let mut degenerate_days = Vec::new();
    for (d, day) in days.iter_mut().enumerate() {
        let block = &mask[day.intervals.clone()];
        let first = block.iter().position(|&b| b);
        let last = block.iter().rposition(|&b| b);
        match (first, last) {
            (Some(a), Some(b)) => {
                if block[a..=b].iter().any(|&x| !x) {
                    return Err(Error::Config(format!(
                        "daytime on {} is not a single contiguous block",
                        day.date
                    )));
                }
                let base = day.intervals.start;
                day.daytime = base + a..base + b + 1;
            }
            _ => {
                day.daytime = day.intervals.start..day.intervals.start;
                degenerate_days.push(d);
            }
        }
    }

    Ok(Calendar {
        start,
        interval_minutes,
        day_index,
        daytime: mask,
        days,
        degenerate_days,
    })
}

impl Calendar {
    pub fn start(&self) -> DateTime<FixedOffset> {
        self.start
    }

    pub fn interval_minutes(&self) -> u32 {
        self.interval_minutes
    }

    pub fn interval_hours(&self) -> f64 {
        self.interval_minutes as f64 / 60.0
    }

    pub fn n_intervals(&self) -> usize {
        self.daytime.len()
    }

    pub fn n_days(&self) -> usize {
        self.days.len()
    }

    pub fn days(&self) -> &[Day] {
        &self.days
    }

    pub fn day_of(&self, t: usize) -> usize {
        self.day_index[t] as usize
    }

    pub fn is_daytime(&self, t: usize) -> bool {
        self.daytime[t]
    }

    pub fn daytime_mask(&self) -> &[bool] {
        &self.daytime
    }

    pub fn degenerate_days(&self) -> &[usize] {
        &self.degenerate_days
    }

    pub fn timestamp(&self, t: usize) -> DateTime<FixedOffset> {
        self.start + Duration::minutes(self.interval_minutes as i64 * t as i64)
    }

    /// Local month (1..=12) of interval `t`.
    pub fn month(&self, t: usize) -> u32 {
        self.timestamp(t).month()
    }

    /// Local hour-of-day of interval `t`'s start.
    pub fn hour(&self, t: usize) -> u32 {
        self.timestamp(t).hour()
    }

    /// Maps a timestamp onto an interval index if it lies exactly on the grid.
    pub fn index_of(&self, ts: &DateTime<FixedOffset>) -> Option<usize> {
        let secs = (*ts - self.start).num_seconds();
        let step = self.interval_minutes as i64 * 60;
        if secs < 0 || secs % step != 0 {
            return None;
        }
        let idx = (secs / step) as usize;
        (idx < self.n_intervals()).then_some(idx)
    }

    /// Same grid with a different daytime mask.
    pub fn with_daytime(&self, daytime: &DaytimeSpec) -> Result<Calendar> {
        build_calendar(self.start, self.n_intervals(), self.interval_minutes, daytime)
    }

    pub fn format_timestamp(&self, t: usize) -> String {
        format_timestamp(&self.timestamp(t))
    }
}

pub fn format_timestamp(ts: &DateTime<FixedOffset>) -> String {
    ts.format("%Y-%m-%dT%H:%M:%S%:z").to_string()
}

pub fn parse_timestamp(s: &str) -> std::result::Result<DateTime<FixedOffset>, chrono::ParseError> {
    DateTime::parse_from_rfc3339(s.trim())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    NetConsumption,
    NetGeneration,
    TotalGeneration,
    NativeLoad,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::NetConsumption => "net_consumption",
            Channel::NetGeneration => "net_generation",
            Channel::TotalGeneration => "total_generation",
            Channel::NativeLoad => "native_load",
        }
    }

    /// Canonical sign: consumption is stored ≤ 0, everything else ≥ 0.
    pub fn is_non_positive(self) -> bool {
        matches!(self, Channel::NetConsumption)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "net_consumption" => Ok(Channel::NetConsumption),
            "net_generation" => Ok(Channel::NetGeneration),
            "total_generation" => Ok(Channel::TotalGeneration),
            "native_load" => Ok(Channel::NativeLoad),
            other => Err(format!("unknown channel {other:?}")),
        }
    }
}

/// Energy per interval (kWh) for one channel of one customer.
///
/// Gap intervals hold `0.0` and are flagged in `gaps`; consumers must consult
/// the mask rather than the value.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalSeries {
    pub customer_id: String,
    pub channel: Channel,
    pub values: Vec<f64>,
    pub gaps: Vec<bool>,
}

impl IntervalSeries {
    pub fn complete(customer_id: impl Into<String>, channel: Channel, values: Vec<f64>) -> Self {
        let n = values.len();
        IntervalSeries {
            customer_id: customer_id.into(),
            channel,
            values,
            gaps: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_gap(&self, t: usize) -> bool {
        self.gaps[t]
    }

    pub fn gap_count(&self) -> usize {
        self.gaps.iter().filter(|&&g| g).count()
    }

    /// Sum over non-gap intervals.
    pub fn total(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.gaps)
            .filter(|(_, &g)| !g)
            .map(|(v, _)| *v)
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignConvention {
    ConsumptionPositive,
    ConsumptionNegative,
}

impl FromStr for SignConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "consumption_positive" => Ok(SignConvention::ConsumptionPositive),
            "consumption_negative" => Ok(SignConvention::ConsumptionNegative),
            other => Err(format!("unknown sign convention {other:?}")),
        }
    }
}

impl fmt::Display for SignConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignConvention::ConsumptionPositive => "consumption_positive",
            SignConvention::ConsumptionNegative => "consumption_negative",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignPolicy {
    /// Wrong-sign magnitudes up to this are rounding noise.
    pub epsilon: f64,
    /// Largest tolerated fraction of values clamped by more than `epsilon`.
    pub max_clamp_fraction: f64,
}

impl Default for SignPolicy {
    fn default() -> Self {
        SignPolicy {
            epsilon: 1e-9,
            max_clamp_fraction: 0.01,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SignReport {
    /// Every value clamped to zero.
    pub clamped: usize,
    /// Clamped values whose wrong-sign magnitude exceeded epsilon.
    pub significant: usize,
}

/// Converts a series into the canonical sign convention.
///
/// Values on the wrong side of zero are clamped to `0.0`; when more than
/// `max_clamp_fraction` of the non-gap values were off by more than `epsilon`
/// the series is rejected.
pub fn canonicalize_signs(
    mut series: IntervalSeries,
    source: SignConvention,
    policy: &SignPolicy,
) -> Result<(IntervalSeries, SignReport)> {
    let flip = series.channel.is_non_positive() && source == SignConvention::ConsumptionPositive;
    let non_positive = series.channel.is_non_positive();
    let mut report = SignReport::default();
    let mut present = 0usize;
    for (v, &gap) in series.values.iter_mut().zip(&series.gaps) {
        if gap {
            continue;
        }
        present += 1;
        if flip {
            *v = -*v;
        }
        let wrong = if non_positive { *v > 0.0 } else { *v < 0.0 };
        if wrong {
            report.clamped += 1;
            if v.abs() > policy.epsilon {
                report.significant += 1;
            }
            *v = 0.0;
        }
        // normalise -0.0 so output bytes do not depend on the input convention
        *v += 0.0;
    }
    if present > 0 && report.significant as f64 > policy.max_clamp_fraction * present as f64 {
        return Err(Error::DataQuality(format!(
            "{} {}: {} of {} values have the wrong sign",
            series.customer_id, series.channel, report.significant, present
        )));
    }
    Ok((series, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CustomerKind {
    NonSolar,
    NetMeterSolar,
    SpoSolar,
}

impl CustomerKind {
    pub fn is_solar(self) -> bool {
        !matches!(self, CustomerKind::NonSolar)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CustomerRecord {
    pub customer_id: String,
    pub kind: CustomerKind,
    pub channels: BTreeMap<Channel, IntervalSeries>,
}

impl CustomerRecord {
    /// Builds a record, inferring its kind from the channel set.
    pub fn new(customer_id: impl Into<String>, channels: Vec<IntervalSeries>) -> Result<Self> {
        let customer_id = customer_id.into();
        let mut map = BTreeMap::new();
        for s in channels {
            if s.customer_id != customer_id {
                return Err(Error::Contract(format!(
                    "series for {} attached to {}",
                    s.customer_id, customer_id
                )));
            }
            if map.insert(s.channel, s).is_some() {
                return Err(Error::Contract(format!("{customer_id}: channel given twice")));
            }
        }
        let has = |c| map.contains_key(&c);
        let kind = match (
            has(Channel::NetConsumption),
            has(Channel::NetGeneration),
            has(Channel::TotalGeneration),
        ) {
            (true, false, false) => CustomerKind::NonSolar,
            (true, true, false) => CustomerKind::NetMeterSolar,
            (true, true, true) => CustomerKind::SpoSolar,
            _ => {
                let names: Vec<_> = map.keys().map(|c| c.as_str()).collect();
                return Err(Error::Contract(format!(
                    "{customer_id}: unsupported channel set {names:?}"
                )));
            }
        };
        if has(Channel::NativeLoad) {
            return Err(Error::Contract(format!(
                "{customer_id}: native_load is derived, not metered"
            )));
        }
        let mut lens = map.values().map(|s| s.len());
        let n = lens.next().unwrap_or(0);
        if lens.any(|l| l != n) {
            return Err(Error::Alignment(format!(
                "{customer_id}: channels have different lengths"
            )));
        }
        Ok(CustomerRecord {
            customer_id,
            kind,
            channels: map,
        })
    }

    pub fn channel(&self, c: Channel) -> Option<&IntervalSeries> {
        self.channels.get(&c)
    }

    pub fn net_consumption(&self) -> &IntervalSeries {
        &self.channels[&Channel::NetConsumption]
    }

    pub fn net_generation(&self) -> Option<&IntervalSeries> {
        self.channels.get(&Channel::NetGeneration)
    }

    pub fn total_generation(&self) -> Option<&IntervalSeries> {
        self.channels.get(&Channel::TotalGeneration)
    }

    pub fn len(&self) -> usize {
        self.net_consumption().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One metered value before alignment.
#[derive(Clone, Debug, PartialEq)]
pub struct RawReading {
    pub timestamp: DateTime<FixedOffset>,
    pub value: f64,
    /// Source line (1-based, header = 1), 0 when not from a file.
    pub line: u64,
}

/// Unaligned rows for one customer, grouped by channel.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawCustomer {
    pub customer_id: String,
    pub rows: BTreeMap<Channel, Vec<RawReading>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aligned {
    pub record: CustomerRecord,
    /// Rows whose timestamps are off-grid or outside the calendar.
    pub unmatched: Vec<(Channel, RawReading)>,
}

/// Re-indexes raw rows onto the calendar, flagging missing intervals as gaps.
pub fn align_customer(raw: &RawCustomer, calendar: &Calendar) -> Result<Aligned> {
    let n = calendar.n_intervals();
    let mut series = Vec::with_capacity(raw.rows.len());
    let mut unmatched = Vec::new();
    let mut duplicates = Vec::new();
    for (&channel, rows) in &raw.rows {
        let mut values = vec![0.0; n];
        let mut gaps = vec![true; n];
        for r in rows {
            match calendar.index_of(&r.timestamp) {
                Some(t) if !gaps[t] => duplicates.push(DuplicateRow {
                    customer_id: raw.customer_id.clone(),
                    channel: channel.to_string(),
                    timestamp: format_timestamp(&r.timestamp),
                }),
                Some(t) => {
                    values[t] = r.value;
                    gaps[t] = false;
                }
                None => unmatched.push((channel, r.clone())),
            }
        }
        series.push(IntervalSeries {
            customer_id: raw.customer_id.clone(),
            channel,
            values,
            gaps,
        });
    }
    if !duplicates.is_empty() {
        return Err(Error::Duplicates(duplicates));
    }
    Ok(Aligned {
        record: CustomerRecord::new(raw.customer_id.clone(), series)?,
        unmatched,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub calendar: Calendar,
    pub customers: Vec<CustomerRecord>,
    pub weather: Vec<WeatherObservation>,
    index: HashMap<String, usize>,
}

impl Dataset {
    pub fn new(
        calendar: Calendar,
        customers: Vec<CustomerRecord>,
        weather: Vec<WeatherObservation>,
    ) -> Result<Self> {
        let n = calendar.n_intervals();
        let mut index = HashMap::with_capacity(customers.len());
        for (i, c) in customers.iter().enumerate() {
            if index.insert(c.customer_id.clone(), i).is_some() {
                return Err(Error::Contract(format!(
                    "customer id {} appears twice",
                    c.customer_id
                )));
            }
            if c.channels.values().any(|s| s.len() != n) {
                return Err(Error::Alignment(format!(
                    "{}: series length differs from calendar ({n})",
                    c.customer_id
                )));
            }
        }
        Ok(Dataset {
            calendar,
            customers,
            weather,
            index,
        })
    }

    pub fn get(&self, customer_id: &str) -> Option<&CustomerRecord> {
        self.index.get(customer_id).map(|&i| &self.customers[i])
    }

    pub fn position(&self, customer_id: &str) -> Option<usize> {
        self.index.get(customer_id).copied()
    }

    pub fn solar(&self) -> impl Iterator<Item = &CustomerRecord> {
        self.customers.iter().filter(|c| c.kind.is_solar())
    }

    pub fn non_solar(&self) -> impl Iterator<Item = &CustomerRecord> {
        self.customers.iter().filter(|c| !c.kind.is_solar())
    }

    /// Gap count per customer, for coverage reports.
    pub fn gap_summary(&self) -> Vec<(String, usize)> {
        self.customers
            .iter()
            .map(|c| {
                let gaps: usize = c.channels.values().map(|s| s.gap_count()).sum();
                (c.customer_id.clone(), gaps)
            })
            .collect()
    }

    pub fn customer_ids(&self) -> HashSet<&str> {
        self.index.keys().map(|s| s.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn midnight() -> DateTime<FixedOffset> {
        parse_timestamp("2023-01-01T00:00:00-08:00").unwrap()
    }

    #[test]
    fn hourly_single_day_has_fourteen_daytime_intervals() {
        let cal = build_calendar(midnight(), 24, 60, &DaytimeSpec::default()).unwrap();
        assert_eq!(cal.n_days(), 1);
        assert_eq!(cal.days()[0].daytime_len(), 14);
        assert!(cal.degenerate_days().is_empty());
    }

    #[test]
    fn two_hourly_days() {
        let cal = build_calendar(midnight(), 48, 60, &DaytimeSpec::default()).unwrap();
        assert_eq!(cal.n_days(), 2);
        assert!(cal.days().iter().all(|d| d.daytime_len() == 14));
        assert_eq!(cal.day_of(23), 0);
        assert_eq!(cal.day_of(24), 1);
    }

    #[test]
    fn quarter_hour_day_counts_window_starts() {
        // oracle: count k in 0..96 with 06:00 <= k*15min < 20:00
        let expected = (0..96u32).filter(|k| (360..1200).contains(&(k * 15))).count();
        assert_eq!(expected, 56);
        let cal = build_calendar(midnight(), 96, 15, &DaytimeSpec::default()).unwrap();
        assert_eq!(cal.days()[0].daytime_len(), expected);
    }

    #[test]
    fn interval_must_divide_day() {
        let err = build_calendar(midnight(), 10, 7, &DaytimeSpec::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(build_calendar(midnight(), 0, 60, &DaytimeSpec::default()).is_err());
    }

    #[test]
    fn degenerate_day_is_reported() {
        let mut flags = vec![false; 48];
        flags[30] = true;
        let cal = build_calendar(midnight(), 48, 60, &DaytimeSpec::Flags(flags)).unwrap();
        assert_eq!(cal.degenerate_days(), &[0]);
        assert_eq!(cal.days()[1].daytime, 30..31);
    }

    #[test]
    fn split_daylight_flags_rejected() {
        let mut flags = vec![false; 24];
        flags[8] = true;
        flags[12] = true;
        assert!(build_calendar(midnight(), 24, 60, &DaytimeSpec::Flags(flags)).is_err());
    }

    #[test]
    fn per_month_window_override() {
        let mut w = MonthWindows::default();
        w.set(1, 8 * 60, 16 * 60).unwrap();
        let cal = build_calendar(midnight(), 24, 60, &DaytimeSpec::Window(w)).unwrap();
        assert_eq!(cal.days()[0].daytime, 8..16);
    }

    #[test]
    fn sign_flip_for_positive_consumption() {
        let s = IntervalSeries::complete("a", Channel::NetConsumption, vec![2.0, 0.5]);
        let (out, rep) =
            canonicalize_signs(s, SignConvention::ConsumptionPositive, &SignPolicy::default())
                .unwrap();
        assert_eq!(out.values, vec![-2.0, -0.5]);
        assert_eq!(rep.clamped, 0);
    }

    #[test]
    fn generation_unchanged_under_either_convention() {
        for conv in [
            SignConvention::ConsumptionPositive,
            SignConvention::ConsumptionNegative,
        ] {
            let s = IntervalSeries::complete("a", Channel::NetGeneration, vec![1.0, 0.0]);
            let (out, _) = canonicalize_signs(s, conv, &SignPolicy::default()).unwrap();
            assert_eq!(out.values, vec![1.0, 0.0]);
        }
    }

    #[test]
    fn tiny_wrong_sign_value_is_clamped_and_counted() {
        let s = IntervalSeries::complete("a", Channel::NetConsumption, vec![-2.0, 1e-12]);
        let (out, rep) =
            canonicalize_signs(s, SignConvention::ConsumptionNegative, &SignPolicy::default())
                .unwrap();
        assert_eq!(out.values, vec![-2.0, 0.0]);
        assert_eq!(rep.clamped, 1);
        assert_eq!(rep.significant, 0);
    }

    #[test]
    fn too_many_clamps_is_a_data_quality_error() {
        let mut v = vec![-1.0; 100];
        v[3] = 0.5;
        v[7] = 0.5;
        let s = IntervalSeries::complete("a", Channel::NetConsumption, v);
        let err = canonicalize_signs(s, SignConvention::ConsumptionNegative, &SignPolicy::default())
            .unwrap_err();
        assert!(matches!(err, Error::DataQuality(_)));
    }

    fn raw_hourly(id: &str, n: usize, skip: Option<usize>) -> RawCustomer {
        let mut rows = Vec::new();
        for t in 0..n {
            if Some(t) == skip {
                continue;
            }
            rows.push(RawReading {
                timestamp: midnight() + Duration::hours(t as i64),
                value: -(t as f64),
                line: t as u64 + 2,
            });
        }
        let mut raw = RawCustomer {
            customer_id: id.into(),
            ..Default::default()
        };
        raw.rows.insert(Channel::NetConsumption, rows);
        raw
    }

    #[test]
    fn complete_year_has_no_gaps() {
        let cal = build_calendar(midnight(), 8760, 60, &DaytimeSpec::default()).unwrap();
        let a = align_customer(&raw_hourly("c", 8760, None), &cal).unwrap();
        assert_eq!(a.record.net_consumption().gap_count(), 0);
        assert!(a.unmatched.is_empty());
        assert_eq!(a.record.kind, CustomerKind::NonSolar);
    }

    #[test]
    fn one_missing_interval_is_one_gap() {
        let cal = build_calendar(midnight(), 8760, 60, &DaytimeSpec::default()).unwrap();
        let a = align_customer(&raw_hourly("c", 8760, Some(4321)), &cal).unwrap();
        let s = a.record.net_consumption();
        assert_eq!(s.gap_count(), 1);
        assert!(s.is_gap(4321));
    }

    #[test]
    fn duplicate_row_names_customer_channel_and_time() {
        let cal = build_calendar(midnight(), 24, 60, &DaytimeSpec::default()).unwrap();
        let mut raw = raw_hourly("c9", 24, None);
        let dup = raw.rows[&Channel::NetConsumption][5].clone();
        raw.rows.get_mut(&Channel::NetConsumption).unwrap().push(dup);
        let err = align_customer(&raw, &cal).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("c9"), "{msg}");
        assert!(msg.contains("net_consumption"), "{msg}");
        assert!(msg.contains("2023-01-01T05:00:00-08:00"), "{msg}");
    }

    #[test]
    fn off_grid_rows_are_reported() {
        let cal = build_calendar(midnight(), 24, 60, &DaytimeSpec::default()).unwrap();
        let mut raw = raw_hourly("c", 24, None);
        raw.rows
            .get_mut(&Channel::NetConsumption)
            .unwrap()
            .push(RawReading {
                timestamp: midnight() + Duration::minutes(90),
                value: -1.0,
                line: 99,
            });
        let a = align_customer(&raw, &cal).unwrap();
        assert_eq!(a.unmatched.len(), 1);
    }

    #[test]
    fn kind_follows_channels() {
        let mk = |c| IntervalSeries::complete("x", c, vec![0.0; 3]);
        let r = CustomerRecord::new(
            "x",
            vec![mk(Channel::NetConsumption), mk(Channel::NetGeneration)],
        )
        .unwrap();
        assert_eq!(r.kind, CustomerKind::NetMeterSolar);
        let r = CustomerRecord::new(
            "x",
            vec![
                mk(Channel::NetConsumption),
                mk(Channel::NetGeneration),
                mk(Channel::TotalGeneration),
            ],
        )
        .unwrap();
        assert_eq!(r.kind, CustomerKind::SpoSolar);
        assert!(CustomerRecord::new("x", vec![mk(Channel::NetGeneration)]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn canonicalize_is_idempotent(
                vals in proptest::collection::vec(-5.0f64..5.0, 1..50),
                positive in any::<bool>(),
                consumption in any::<bool>(),
            ) {
                let channel = if consumption { Channel::NetConsumption } else { Channel::NetGeneration };
                let conv = if positive { SignConvention::ConsumptionPositive } else { SignConvention::ConsumptionNegative };
                let loose = SignPolicy { epsilon: 1e-9, max_clamp_fraction: 1.0 };
                let s = IntervalSeries::complete("p", channel, vals);
                let (once, _) = canonicalize_signs(s, conv, &loose).unwrap();
                // the second pass sees canonical data, i.e. consumption_negative
                let (twice, rep) = canonicalize_signs(once.clone(), SignConvention::ConsumptionNegative, &loose).unwrap();
                prop_assert_eq!(&once, &twice);
                prop_assert_eq!(rep.clamped, 0);
            }

            #[test]
            fn daytime_counts_sum_to_mask(
                n_days in 1usize..5,
                step in prop_oneof![Just(15u32), Just(30), Just(60)],
                start_h in 0u32..12,
                len_h in 1u32..12,
            ) {
                let per_day = (MINUTES_PER_DAY / step) as usize;
                let w = MonthWindows::uniform(start_h * 60, (start_h + len_h) * 60).unwrap();
                let cal = build_calendar(midnight(), n_days * per_day, step, &DaytimeSpec::Window(w)).unwrap();
                let total: usize = cal.days().iter().map(|d| d.daytime_len()).sum();
                prop_assert_eq!(total, cal.daytime_mask().iter().filter(|&&b| b).count());
                prop_assert_eq!(cal.n_days(), n_days);
            }
        }
    }
}
