//! Weather-weighted usage differences between solar and non-solar customers
//! and selection of each solar customer's similar set.
//!
//! For a pair `(i, j)` the daily difference is the sum of `|u_i,t - u_j,t|`
//! over the day's daytime intervals; the annual difference weights each day
//! by `S̄_d`. The interval-level differences are never stored: each pair
//! streams over compact per-customer daytime profiles.
//!
//! Within a pair, days and intervals are accumulated in chronological order,
//! so the matrix does not depend on how pairs are spread across threads.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Calendar, Dataset, IntervalSeries};
use crate::weather::DailyWeight;

/// Day exclusion rule for gapped data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapRule {
    /// A day is dropped for a pair when either customer has more than this
    /// fraction of its daytime intervals missing.
    pub max_day_gap_fraction: f64,
}

impl Default for GapRule {
    fn default() -> Self {
        GapRule {
            max_day_gap_fraction: 0.5,
        }
    }
}

/// Daytime-only view of one customer's net consumption.
struct DaytimeProfile {
    values: Vec<f64>,
    /// Compact gap mask; `None` when the series is complete.
    gaps: Option<Vec<bool>>,
    excluded: Vec<bool>,
}

/// Offsets of each day's daytime block inside a compact profile.
struct DayLayout {
    offsets: Vec<usize>,
}

impl DayLayout {
    fn new(calendar: &Calendar) -> Self {
        let mut offsets = Vec::with_capacity(calendar.n_days() + 1);
        let mut acc = 0;
        offsets.push(0);
        for day in calendar.days() {
            acc += day.daytime_len();
            offsets.push(acc);
        }
        DayLayout { offsets }
    }

    fn n_days(&self) -> usize {
        self.offsets.len() - 1
    }

    fn day(&self, d: usize) -> std::ops::Range<usize> {
        self.offsets[d]..self.offsets[d + 1]
    }
}

impl DaytimeProfile {
    fn new(series: &IntervalSeries, calendar: &Calendar, rule: &GapRule) -> Self {
        let total: usize = calendar.days().iter().map(|d| d.daytime_len()).sum();
        let mut values = Vec::with_capacity(total);
        let mut gaps = Vec::with_capacity(total);
        let mut excluded = Vec::with_capacity(calendar.n_days());
        for day in calendar.days() {
            let mut missing = 0usize;
            for t in day.daytime.clone() {
                values.push(series.values[t]);
                gaps.push(series.gaps[t]);
                missing += series.gaps[t] as usize;
            }
            excluded.push(missing as f64 > rule.max_day_gap_fraction * day.daytime_len() as f64);
        }
        let any_gap = gaps.iter().any(|&g| g);
        DaytimeProfile {
            values,
            gaps: any_gap.then_some(gaps),
            excluded,
        }
    }
}

fn day_difference(a: &DaytimeProfile, b: &DaytimeProfile, layout: &DayLayout, d: usize) -> Option<f64> {
    if a.excluded[d] || b.excluded[d] {
        return None;
    }
    let r = layout.day(d);
    let (xa, xb) = (&a.values[r.clone()], &b.values[r.clone()]);
    let mut sum = 0.0;
    match (&a.gaps, &b.gaps) {
        (None, None) => {
            for (p, q) in xa.iter().zip(xb) {
                sum += (p - q).abs();
            }
        }
        (ga, gb) => {
            for (k, (p, q)) in xa.iter().zip(xb).enumerate() {
                let t = r.start + k;
                let gapped = ga.as_ref().is_some_and(|g| g[t]) || gb.as_ref().is_some_and(|g| g[t]);
                if !gapped {
                    sum += (p - q).abs();
                }
            }
        }
    }
    Some(sum)
}

/// Weighted annual difference of one pair, with the number of dropped days.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairDelta {
    /// `None` when every day was excluded.
    pub value: Option<f64>,
    pub excluded_days: u32,
}

fn pair_delta(a: &DaytimeProfile, b: &DaytimeProfile, layout: &DayLayout, weights: &DailyWeight) -> PairDelta {
    let mut acc = 0.0;
    let mut retained = 0u32;
    let mut excluded = 0u32;
    for d in 0..layout.n_days() {
        match day_difference(a, b, layout, d) {
            Some(x) => {
                acc += weights.values[d] * x;
                retained += 1;
            }
            None => excluded += 1,
        }
    }
    PairDelta {
        value: (retained > 0).then_some(acc),
        excluded_days: excluded,
    }
}

fn check_len(series: &IntervalSeries, calendar: &Calendar) -> Result<()> {
    if series.len() != calendar.n_intervals() {
        return Err(Error::Alignment(format!(
            "{} {} has {} intervals, calendar has {}",
            series.customer_id,
            series.channel,
            series.len(),
            calendar.n_intervals()
        )));
    }
    Ok(())
}

/// Daily usage differences `Δ_ij,d`; `None` marks a day dropped by the gap rule.
pub fn pair_daily_difference(
    u_i: &IntervalSeries,
    u_j: &IntervalSeries,
    calendar: &Calendar,
    rule: &GapRule,
) -> Result<Vec<Option<f64>>> {
    check_len(u_i, calendar)?;
    check_len(u_j, calendar)?;
    let layout = DayLayout::new(calendar);
    let a = DaytimeProfile::new(u_i, calendar, rule);
    let b = DaytimeProfile::new(u_j, calendar, rule);
    Ok((0..layout.n_days())
        .map(|d| day_difference(&a, &b, &layout, d))
        .collect())
}

/// `Σ_d S̄_d · Δ_ij,d` over retained days, in day order.
pub fn weighted_annual_difference(daily: &[Option<f64>], weights: &DailyWeight) -> Result<PairDelta> {
    if daily.len() != weights.len() {
        return Err(Error::Alignment(format!(
            "{} daily differences for {} daily weights",
            daily.len(),
            weights.len()
        )));
    }
    let mut acc = 0.0;
    let mut retained = 0u32;
    let mut excluded = 0u32;
    for (x, w) in daily.iter().zip(&weights.values) {
        match x {
            Some(x) => {
                acc += w * x;
                retained += 1;
            }
            None => excluded += 1,
        }
    }
    Ok(PairDelta {
        value: (retained > 0).then_some(acc),
        excluded_days: excluded,
    })
}

/// Dense `Δ` matrix, solar customers by row, non-solar customers by column.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    pub solar_ids: Vec<String>,
    pub nonsolar_ids: Vec<String>,
    delta: Vec<Option<f64>>,
    excluded_days: Vec<u32>,
}

impl SimilarityMatrix {
    pub fn n_solar(&self) -> usize {
        self.solar_ids.len()
    }

    pub fn n_nonsolar(&self) -> usize {
        self.nonsolar_ids.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.delta[i * self.n_nonsolar() + j]
    }

    pub fn excluded_days(&self, i: usize, j: usize) -> u32 {
        self.excluded_days[i * self.n_nonsolar() + j]
    }

    pub fn row(&self, i: usize) -> &[Option<f64>] {
        let n = self.n_nonsolar();
        &self.delta[i * n..(i + 1) * n]
    }
}

/// Computes `Δ_ij` for every solar × non-solar pair on the current rayon pool.
pub fn similarity_matrix(dataset: &Dataset, weights: &DailyWeight, rule: &GapRule) -> Result<SimilarityMatrix> {
    let calendar = &dataset.calendar;
    if weights.len() != calendar.n_days() {
        return Err(Error::Alignment(format!(
            "{} daily weights for {} days",
            weights.len(),
            calendar.n_days()
        )));
    }
    let solar: Vec<_> = dataset.solar().collect();
    let nonsolar: Vec<_> = dataset.non_solar().collect();
    if nonsolar.is_empty() {
        return Err(Error::Config("no non-solar customers to compare against".into()));
    }
    if solar.is_empty() {
        return Err(Error::Config("no solar customers in dataset".into()));
    }

    let layout = DayLayout::new(calendar);
    let profile = |c: &&crate::model::CustomerRecord| {
        let s = c.net_consumption();
        check_len(s, calendar).map(|_| DaytimeProfile::new(s, calendar, rule))
    };
    let solar_p: Vec<DaytimeProfile> = solar.par_iter().map(profile).collect::<Result<_>>()?;
    let nonsolar_p: Vec<DaytimeProfile> = nonsolar.par_iter().map(profile).collect::<Result<_>>()?;

    let n = nonsolar.len();
    let cells: Vec<PairDelta> = (0..solar.len() * n)
        .into_par_iter()
        .map(|k| pair_delta(&solar_p[k / n], &nonsolar_p[k % n], &layout, weights))
        .collect();

    Ok(SimilarityMatrix {
        solar_ids: solar.iter().map(|c| c.customer_id.clone()).collect(),
        nonsolar_ids: nonsolar.iter().map(|c| c.customer_id.clone()).collect(),
        delta: cells.iter().map(|c| c.value).collect(),
        excluded_days: cells.iter().map(|c| c.excluded_days).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigmaKind {
    /// Divisor n − 1.
    Sample,
    /// Divisor n.
    Population,
}

impl FromStr for SigmaKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "sample" => Ok(SigmaKind::Sample),
            "population" => Ok(SigmaKind::Population),
            other => Err(format!("unknown sigma kind {other:?}")),
        }
    }
}

impl fmt::Display for SigmaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SigmaKind::Sample => "sample",
            SigmaKind::Population => "population",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectionRule {
    pub sigma: SigmaKind,
    /// Neighbours taken by nearest-k when the threshold selects nobody.
    pub fallback_k: usize,
}

impl Default for SelectionRule {
    fn default() -> Self {
        SelectionRule {
            sigma: SigmaKind::Sample,
            fallback_k: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor {
    pub customer_id: String,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeighborSet {
    pub solar_customer_id: String,
    /// Members in column order.
    pub members: Vec<Neighbor>,
    /// `med(Δ_i·) − σ(Δ_i·)`.
    pub threshold: f64,
    pub fallback_used: bool,
}

impl NeighborSet {
    pub fn member_ids(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(|m| m.customer_id.as_str())
    }
}

/// Median; the mean of the two central values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn std_dev(values: &[f64], kind: SigmaKind) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|x| (x - mean) * (x - mean)).sum();
    let div = match kind {
        SigmaKind::Sample => n - 1.0,
        SigmaKind::Population => n,
    };
    (ss / div).sqrt()
}

/// Selects `{ j : Δ_ij ≤ med − σ }` from one matrix row, falling back to the
/// `fallback_k` smallest entries when that set is empty.
pub fn select_neighbors(
    solar_customer_id: &str,
    row: &[Option<f64>],
    candidate_ids: &[String],
    rule: &SelectionRule,
) -> Result<NeighborSet> {
    if row.len() != candidate_ids.len() {
        return Err(Error::Alignment(format!(
            "{} deltas for {} candidates",
            row.len(),
            candidate_ids.len()
        )));
    }
    let valid: Vec<(usize, f64)> = row
        .iter()
        .enumerate()
        .filter_map(|(j, d)| d.map(|d| (j, d)))
        .collect();
    if valid.len() < 2 {
        return Err(Error::InsufficientPool {
            customer: solar_customer_id.to_string(),
            valid: valid.len(),
        });
    }
    let values: Vec<f64> = valid.iter().map(|&(_, d)| d).collect();
    let threshold = median(&values) - std_dev(&values, rule.sigma);

    let mut chosen: Vec<(usize, f64)> = valid.iter().copied().filter(|&(_, d)| d <= threshold).collect();
    let fallback_used = chosen.is_empty();
    if fallback_used {
        let mut by_delta = valid.clone();
        by_delta.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        by_delta.truncate(rule.fallback_k.max(1));
        by_delta.sort_by_key(|&(j, _)| j);
        chosen = by_delta;
    }
    Ok(NeighborSet {
        solar_customer_id: solar_customer_id.to_string(),
        members: chosen
            .into_iter()
            .map(|(j, delta)| Neighbor {
                customer_id: candidate_ids[j].clone(),
                delta,
            })
            .collect(),
        threshold,
        fallback_used,
    })
}

/// Neighbour sets for every row of the matrix.
pub fn select_all(matrix: &SimilarityMatrix, rule: &SelectionRule) -> Result<Vec<NeighborSet>> {
    (0..matrix.n_solar())
        .map(|i| select_neighbors(&matrix.solar_ids[i], matrix.row(i), &matrix.nonsolar_ids, rule))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_calendar, parse_timestamp, Channel, DaytimeSpec};

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|j| format!("n{j}")).collect()
    }

    fn row(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().map(|&x| Some(x)).collect()
    }

    #[test]
    fn two_interval_day_difference() {
        let start = parse_timestamp("2023-06-01T00:00:00+00:00").unwrap();
        let mut flags = vec![false; 24];
        flags[10] = true;
        flags[11] = true;
        let cal = build_calendar(start, 24, 60, &DaytimeSpec::Flags(flags)).unwrap();
        let mut a = vec![0.0; 24];
        let mut b = vec![0.0; 24];
        a[10] = -3.0;
        a[11] = -1.0;
        b[10] = -2.0;
        b[11] = -2.0;
        // night values must not count
        a[2] = -7.0;
        let ui = IntervalSeries::complete("i", Channel::NetConsumption, a);
        let uj = IntervalSeries::complete("j", Channel::NetConsumption, b);
        let d = pair_daily_difference(&ui, &uj, &cal, &GapRule::default()).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d[0].unwrap() - 2.0).abs() < 1e-9);
        let same = pair_daily_difference(&ui, &ui, &cal, &GapRule::default()).unwrap();
        assert_eq!(same, vec![Some(0.0)]);
    }

    #[test]
    fn weighted_sum_of_two_days() {
        let w = DailyWeight {
            values: vec![1.0, 0.001],
        };
        let p = weighted_annual_difference(&[Some(2.0), Some(4.0)], &w).unwrap();
        assert!((p.value.unwrap() - 2.004).abs() < 1e-9);
        let none = weighted_annual_difference(&[None, None], &w).unwrap();
        assert_eq!(none.value, None);
        assert_eq!(none.excluded_days, 2);
        assert!(weighted_annual_difference(&[Some(1.0)], &w).is_err());
    }

    #[test]
    fn heavily_gapped_day_is_dropped() {
        let start = parse_timestamp("2023-06-01T00:00:00+00:00").unwrap();
        let cal = build_calendar(start, 48, 60, &DaytimeSpec::default()).unwrap();
        let mut a = IntervalSeries::complete("i", Channel::NetConsumption, vec![-1.0; 48]);
        let b = IntervalSeries::complete("j", Channel::NetConsumption, vec![-2.0; 48]);
        // day 0: 8 of 14 daytime intervals missing -> dropped
        for t in 6..14 {
            a.gaps[t] = true;
        }
        // day 1: 1 missing -> kept, sum over the other 13
        a.gaps[30] = true;
        let d = pair_daily_difference(&a, &b, &cal, &GapRule::default()).unwrap();
        assert_eq!(d[0], None);
        assert!((d[1].unwrap() - 13.0).abs() < 1e-12);
    }

    #[test]
    fn fallback_on_outlier_row() {
        let r = row(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        let ns = select_neighbors(
            "s",
            &r,
            &ids(5),
            &SelectionRule {
                sigma: SigmaKind::Sample,
                fallback_k: 2,
            },
        )
        .unwrap();
        assert!(ns.fallback_used);
        assert!(ns.threshold < 0.0);
        assert!((ns.threshold - (3.0 - 43.617_656_975_128_774)).abs() < 1e-9);
        let got: Vec<_> = ns.member_ids().collect();
        assert_eq!(got, vec!["n0", "n1"]);
    }

    #[test]
    fn three_ones_among_tens() {
        let mut v = vec![10.0; 7];
        v.splice(2..2, [1.0, 1.0, 1.0]);
        let ns = select_neighbors("s", &row(&v), &ids(10), &SelectionRule::default()).unwrap();
        assert!(!ns.fallback_used);
        // oracle: mean 7.3, ss = 3*6.3^2 + 7*2.7^2 = 170.1, sigma = sqrt(170.1/9)
        let sigma = (170.1f64 / 9.0).sqrt();
        assert!((ns.threshold - (10.0 - sigma)).abs() < 1e-12);
        assert!((ns.threshold - 5.65).abs() < 0.01);
        let got: Vec<_> = ns.member_ids().collect();
        assert_eq!(got, vec!["n2", "n3", "n4"]);
    }

    #[test]
    fn all_equal_row_selects_everyone() {
        let ns = select_neighbors("s", &row(&[4.2; 6]), &ids(6), &SelectionRule::default()).unwrap();
        assert_eq!(ns.members.len(), 6);
        assert!(!ns.fallback_used);
        assert_eq!(ns.threshold, 4.2);
    }

    #[test]
    fn insufficient_pool() {
        let r = vec![Some(1.0), None, None];
        let err = select_neighbors("s", &r, &ids(3), &SelectionRule::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientPool { valid: 1, .. }));
    }

    #[test]
    fn invalid_entries_are_ignored() {
        let r = vec![Some(1.0), None, Some(1.0), Some(9.0), Some(9.0), Some(9.0)];
        let ns = select_neighbors("s", &r, &ids(6), &SelectionRule::default()).unwrap();
        let got: Vec<_> = ns.member_ids().collect();
        assert_eq!(got, vec!["n0", "n2"]);
    }

    #[test]
    fn median_even_length() {
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&[5.0]), 5.0);
        assert_eq!(std_dev(&[1.0, 3.0], SigmaKind::Population), 1.0);
    }
}
