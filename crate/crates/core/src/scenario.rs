//! Penetration accounting and synthetic feeder scenarios.
//!
//! Penetration is energy based: aggregate annual generation over aggregate
//! annual native demand.

use std::collections::HashMap;

use chrono::Datelike;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::reconstruction::ReconstructionResult;

#[derive(Clone, Debug, PartialEq)]
pub struct CustomerAnnual {
    pub customer_id: String,
    pub solar: bool,
    /// Σ ĝ for solar customers, 0 otherwise.
    pub annual_generation: f64,
    /// Σ native load estimate for solar customers, Σ |u| otherwise.
    pub annual_native: f64,
}

impl CustomerAnnual {
    pub fn new(id: impl Into<String>, solar: bool, generation: f64, native: f64) -> Self {
        CustomerAnnual {
            customer_id: id.into(),
            solar,
            annual_generation: generation,
            annual_native: native,
        }
    }
}

/// Annual totals for every customer, in dataset order.
pub fn annual_totals(dataset: &Dataset, reconstructions: &[ReconstructionResult]) -> Result<Vec<CustomerAnnual>> {
    let by_id: HashMap<&str, &ReconstructionResult> = reconstructions
        .iter()
        .map(|r| (r.solar_customer_id.as_str(), r))
        .collect();
    dataset
        .customers
        .iter()
        .map(|c| {
            if c.kind.is_solar() {
                let r = by_id.get(c.customer_id.as_str()).ok_or_else(|| {
                    Error::Config(format!("no reconstruction for solar customer {}", c.customer_id))
                })?;
                Ok(CustomerAnnual::new(
                    c.customer_id.clone(),
                    true,
                    r.annual_generation(),
                    r.annual_native(),
                ))
            } else {
                let u = c.net_consumption();
                let native: f64 = u
                    .values
                    .iter()
                    .zip(&u.gaps)
                    .filter(|(_, &g)| !g)
                    .map(|(v, _)| v.abs())
                    .sum();
                Ok(CustomerAnnual::new(c.customer_id.clone(), false, 0.0, native))
            }
        })
        .collect()
}

/// Σ generation / Σ native over the given members (repeat a member to count
/// it more than once).
pub fn penetration<'a, I>(members: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a CustomerAnnual>,
{
    let (gen, native) = members
        .into_iter()
        .fold((0.0, 0.0), |(g, n), c| (g + c.annual_generation, n + c.annual_native));
    if native <= 0.0 {
        return Err(Error::ZeroDenominator("penetration"));
    }
    Ok(gen / native)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOptions {
    pub with_replacement: bool,
    /// Cap on total member count (copies included). Defaults to the pool size,
    /// or ten times the pool size with replacement.
    pub max_members: Option<usize>,
    /// Extra random starts tried after the first local search fails.
    pub restarts: usize,
    /// Pools up to this size fall back to exhaustive search (without
    /// replacement) before reporting infeasibility.
    pub exhaustive_limit: usize,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        ScenarioOptions {
            with_replacement: false,
            max_members: None,
            restarts: 8,
            exhaustive_limit: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// `(customer_id, copies)` in pool order.
    pub members: Vec<(String, u32)>,
    pub achieved_penetration: f64,
    pub target_penetration: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub feasible: bool,
}

impl Scenario {
    pub fn member_count(&self) -> u32 {
        self.members.iter().map(|(_, c)| c).sum()
    }
}

struct Search<'a> {
    pool: &'a [&'a CustomerAnnual],
    target: f64,
    with_replacement: bool,
    max_members: usize,
}

impl Search<'_> {
    fn sums(&self, copies: &[u32]) -> (f64, f64) {
        let mut g = 0.0;
        let mut n = 0.0;
        for (c, &k) in self.pool.iter().zip(copies) {
            let k = k as f64;
            g += c.annual_generation * k;
            n += c.annual_native * k;
        }
        (g, n)
    }

    fn error(&self, g: f64, n: f64) -> f64 {
        if n > 0.0 {
            (g / n - self.target).abs()
        } else {
            f64::INFINITY
        }
    }

    /// Greedy add/remove descent from `copies`; returns the final error.
    fn descend(&self, copies: &mut [u32], tolerance: f64) -> f64 {
        let max_iter = 100 * self.pool.len() + 1000;
        let (mut g, mut n) = self.sums(copies);
        let mut count: usize = copies.iter().map(|&c| c as usize).sum();
        let mut current = self.error(g, n);
        for _ in 0..max_iter {
            if current <= tolerance {
                break;
            }
            let mut best: Option<(f64, usize, bool)> = None;
            for (j, c) in self.pool.iter().enumerate() {
                let can_add = (self.with_replacement || copies[j] == 0) && count < self.max_members;
                if can_add {
                    let e = self.error(g + c.annual_generation, n + c.annual_native);
                    if best.map_or(true, |b| e < b.0) {
                        best = Some((e, j, true));
                    }
                }
                if copies[j] > 0 && count > 1 {
                    let e = self.error(g - c.annual_generation, n - c.annual_native);
                    if best.map_or(true, |b| e < b.0) {
                        best = Some((e, j, false));
                    }
                }
            }
            match best {
                Some((e, j, add)) if e < current => {
                    if add {
                        copies[j] += 1;
                        count += 1;
                    } else {
                        copies[j] -= 1;
                        count -= 1;
                    }
                    // recompute from scratch so drift cannot accumulate
                    (g, n) = self.sums(copies);
                    current = self.error(g, n);
                }
                _ => break,
            }
        }
        current
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<u32> {
        let mut copies: Vec<u32> = (0..self.pool.len()).map(|_| rng.random_bool(0.5) as u32).collect();
        let mut count: usize = copies.iter().map(|&c| c as usize).sum();
        while count > self.max_members {
            let on: Vec<usize> = (0..copies.len()).filter(|&j| copies[j] > 0).collect();
            copies[on[rng.random_range(0..on.len())]] = 0;
            count -= 1;
        }
        if count == 0 {
            let j = rng.random_range(0..copies.len());
            copies[j] = 1;
        }
        copies
    }

    fn exhaustive(&self) -> (Vec<u32>, f64) {
        let n = self.pool.len();
        let mut best = (vec![0; n], f64::INFINITY);
        for mask in 1u64..(1u64 << n) {
            if mask.count_ones() as usize > self.max_members {
                continue;
            }
            let copies: Vec<u32> = (0..n).map(|j| ((mask >> j) & 1) as u32).collect();
            let (g, m) = self.sums(&copies);
            let e = self.error(g, m);
            if e < best.1 {
                best = (copies, e);
            }
        }
        best
    }
}

/// Picks a member multiset from `pool` whose penetration is within
/// `tolerance` of `target`.
///
/// Starts from a seeded random subset and greedily adds or removes the single
/// customer that most reduces the penetration error, restarting from fresh
/// random subsets if it stalls. Small pools get a final exhaustive pass. If
/// nothing reaches the tolerance the best attempt is returned with
/// `feasible = false`.
pub fn build_scenario(
    name: &str,
    pool: &[CustomerAnnual],
    target: f64,
    tolerance: f64,
    seed: u64,
    options: &ScenarioOptions,
) -> Result<Scenario> {
    if !target.is_finite() || target < 0.0 {
        return Err(Error::Config(format!("target penetration {target} must be ≥ 0")));
    }
    if !tolerance.is_finite() || tolerance < 0.0 {
        return Err(Error::Config(format!("tolerance {tolerance} must be ≥ 0")));
    }
    let eligible: Vec<&CustomerAnnual> = pool
        .iter()
        .filter(|c| c.annual_native > 0.0 && c.annual_generation >= 0.0)
        .collect();
    if !eligible.iter().any(|c| c.solar) || !eligible.iter().any(|c| !c.solar) {
        return Err(Error::Config(
            "scenario pool needs at least one solar and one non-solar customer".into(),
        ));
    }
    let max_members = options.max_members.unwrap_or(if options.with_replacement {
        10 * eligible.len()
    } else {
        eligible.len()
    });
    if max_members == 0 {
        return Err(Error::Config("max_members must be ≥ 1".into()));
    }
    let search = Search {
        pool: &eligible,
        target,
        with_replacement: options.with_replacement,
        max_members,
    };

    let mut best: Option<(Vec<u32>, f64)> = None;
    for attempt in 0..=options.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let mut copies = search.random_start(&mut rng);
        let e = search.descend(&mut copies, tolerance);
        if best.as_ref().map_or(true, |b| e < b.1) {
            best = Some((copies, e));
        }
        if e <= tolerance {
            break;
        }
    }
    let (mut copies, err) = best.expect("at least one attempt");
    if err > tolerance && !options.with_replacement && eligible.len() <= options.exhaustive_limit {
        let (c, e) = search.exhaustive();
        if e < err {
            copies = c;
        }
    }

    let chosen: Vec<&CustomerAnnual> = eligible
        .iter()
        .zip(&copies)
        .flat_map(|(c, &k)| std::iter::repeat(*c).take(k as usize))
        .collect();
    let achieved = penetration(chosen.iter().copied())?;
    Ok(Scenario {
        name: name.to_string(),
        members: eligible
            .iter()
            .zip(&copies)
            .filter(|(_, &k)| k > 0)
            .map(|(c, &k)| (c.customer_id.clone(), k))
            .collect(),
        achieved_penetration: achieved,
        target_penetration: target,
        tolerance,
        seed,
        feasible: (achieved - target).abs() <= tolerance,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonthlyTotal {
    /// `YYYY-MM`.
    pub month: String,
    pub consumption: f64,
    /// Reported ≤ 0.
    pub generation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeederAggregate {
    /// Σ native load per interval (≥ 0).
    pub consumption: Vec<f64>,
    /// −Σ total generation per interval (≤ 0).
    pub generation: Vec<f64>,
    pub monthly: Vec<MonthlyTotal>,
}

fn negate(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x
    }
}

/// Sums member profiles into feeder series plus a monthly rollup.
pub fn aggregate_profiles(
    members: &[(String, u32)],
    dataset: &Dataset,
    reconstructions: &[ReconstructionResult],
) -> Result<FeederAggregate> {
    let by_id: HashMap<&str, &ReconstructionResult> = reconstructions
        .iter()
        .map(|r| (r.solar_customer_id.as_str(), r))
        .collect();

    // (native, generation, copies) per member
    let mut sources: Vec<(Vec<f64>, Option<&[f64]>, f64)> = Vec::with_capacity(members.len());
    for (id, copies) in members {
        let rec = dataset
            .get(id)
            .ok_or_else(|| Error::Config(format!("scenario member {id} not in dataset")))?;
        if rec.kind.is_solar() {
            let r = by_id
                .get(id.as_str())
                .ok_or_else(|| Error::Config(format!("no reconstruction for scenario member {id}")))?;
            sources.push((r.native_hat.clone(), Some(&r.g_hat), *copies as f64));
        } else {
            let u = rec.net_consumption();
            let native = u
                .values
                .iter()
                .zip(&u.gaps)
                .map(|(v, &g)| if g { 0.0 } else { v.abs() })
                .collect();
            sources.push((native, None, *copies as f64));
        }
    }

    let cal = &dataset.calendar;
    let n = cal.n_intervals();
    let (consumption, generation): (Vec<f64>, Vec<f64>) = (0..n)
        .into_par_iter()
        .map(|t| {
            let mut c = 0.0;
            let mut g = 0.0;
            for (native, gen, k) in &sources {
                c += native[t] * k;
                if let Some(gen) = gen {
                    g += gen[t] * k;
                }
            }
            (c, negate(g))
        })
        .unzip();

    let mut monthly: Vec<MonthlyTotal> = Vec::new();
    for t in 0..n {
        let ts = cal.timestamp(t);
        let key = format!("{:04}-{:02}", ts.year(), ts.month());
        if monthly.last().map_or(true, |m| m.month != key) {
            monthly.push(MonthlyTotal {
                month: key,
                consumption: 0.0,
                generation: 0.0,
            });
        }
        let m = monthly.last_mut().expect("pushed above");
        m.consumption += consumption[t];
        m.generation += generation[t];
    }
    for m in &mut monthly {
        m.generation = if m.generation == 0.0 { 0.0 } else { m.generation };
    }
    Ok(FeederAggregate {
        consumption,
        generation,
        monthly,
    })
}
