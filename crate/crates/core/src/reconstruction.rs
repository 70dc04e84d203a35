//! Total-generation reconstruction for solar customers.
//!
//! The neighbour mean `û` stands in for what the customer would have drawn
//! without panels. Whenever the metered consumption `u` sits above `û` (less
//! negative), the shortfall is generation consumed on site, so
//! `w = max(0, u − û)` is added to the exported generation `v`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Dataset, IntervalSeries};
use crate::similarity::NeighborSet;

/// Neighbour-average consumption `û` (≤ 0) with its own gap mask.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatedConsumption {
    pub values: Vec<f64>,
    /// True where every member was missing.
    pub gaps: Vec<bool>,
}

pub fn estimate_native(neighbors: &NeighborSet, dataset: &Dataset) -> Result<EstimatedConsumption> {
    if neighbors.members.is_empty() {
        return Err(Error::Contract(format!(
            "empty neighbour set for {}",
            neighbors.solar_customer_id
        )));
    }
    let n = dataset.calendar.n_intervals();
    let mut sums = vec![0.0; n];
    let mut counts = vec![0u32; n];
    for id in neighbors.member_ids() {
        let rec = dataset
            .get(id)
            .ok_or_else(|| Error::Config(format!("neighbour {id} not in dataset")))?;
        if rec.kind.is_solar() {
            return Err(Error::Config(format!("neighbour {id} is a solar customer")));
        }
        let u = rec.net_consumption();
        for t in 0..n {
            if !u.gaps[t] {
                sums[t] += u.values[t];
                counts[t] += 1;
            }
        }
    }
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    Ok(EstimatedConsumption {
        values,
        gaps: counts.iter().map(|&c| c == 0).collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult {
    pub solar_customer_id: String,
    /// Metered net consumption (≤ 0).
    pub u: Vec<f64>,
    pub u_hat: EstimatedConsumption,
    /// Metered net generation (≥ 0).
    pub v: Vec<f64>,
    /// Correction `max(0, u − û)`.
    pub w: Vec<f64>,
    /// Estimated total generation `v + w`.
    pub g_hat: Vec<f64>,
    /// Estimated native load magnitude `|u| + w`.
    pub native_hat: Vec<f64>,
    /// Intervals where `u` or `v` was missing; w is zero there.
    pub gaps: Vec<bool>,
    /// Metered total generation, for customers that have it.
    pub actual: Option<IntervalSeries>,
    /// Intervals where `û` was unavailable and the correction was withheld.
    pub withheld: usize,
    /// Night intervals with a nonzero correction.
    pub night_corrections: usize,
}

impl ReconstructionResult {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Σ w: generation recovered beyond the exported energy.
    pub fn recovered(&self) -> f64 {
        self.w.iter().sum()
    }

    pub fn annual_generation(&self) -> f64 {
        self.g_hat.iter().sum()
    }

    pub fn annual_native(&self) -> f64 {
        self.native_hat.iter().sum()
    }
}

pub fn correct_generation(
    u: &IntervalSeries,
    u_hat: &EstimatedConsumption,
    v: &IntervalSeries,
) -> Result<ReconstructionResult> {
    let n = u.len();
    if v.len() != n || u_hat.values.len() != n || u_hat.gaps.len() != n {
        return Err(Error::Alignment(format!(
            "{}: u, û and v lengths differ",
            u.customer_id
        )));
    }
    let mut w = vec![0.0; n];
    let mut g_hat = vec![0.0; n];
    let mut native_hat = vec![0.0; n];
    let mut gaps = vec![false; n];
    let mut withheld = 0usize;
    for t in 0..n {
        let (ut, vt, uh) = (u.values[t], v.values[t], u_hat.values[t]);
        if !u.gaps[t] && ut > 0.0 {
            return Err(Error::Contract(format!("{}: u[{t}] = {ut} > 0", u.customer_id)));
        }
        if !v.gaps[t] && vt < 0.0 {
            return Err(Error::Contract(format!("{}: v[{t}] = {vt} < 0", u.customer_id)));
        }
        if !u_hat.gaps[t] && uh > 0.0 {
            return Err(Error::Contract(format!("{}: û[{t}] = {uh} > 0", u.customer_id)));
        }
        if u.gaps[t] || v.gaps[t] {
            gaps[t] = true;
            g_hat[t] = if v.gaps[t] { 0.0 } else { vt };
            native_hat[t] = if u.gaps[t] { 0.0 } else { ut.abs() };
            continue;
        }
        let wt = if u_hat.gaps[t] {
            withheld += 1;
            0.0
        } else {
            let d = ut - uh;
            if d > 0.0 {
                d
            } else {
                0.0
            }
        };
        w[t] = wt;
        g_hat[t] = vt + wt;
        native_hat[t] = ut.abs() + wt;
    }
    Ok(ReconstructionResult {
        solar_customer_id: u.customer_id.clone(),
        u: u.values.clone(),
        u_hat: u_hat.clone(),
        v: v.values.clone(),
        w,
        g_hat,
        native_hat,
        gaps,
        actual: None,
        withheld,
        night_corrections: 0,
    })
}

/// Reconstructs every solar customer of the dataset, in dataset order.
pub fn reconstruct_all(dataset: &Dataset, neighbor_sets: &[NeighborSet]) -> Result<Vec<ReconstructionResult>> {
    let solar: Vec<_> = dataset.solar().collect();
    let mut lookup = std::collections::HashMap::new();
    for ns in neighbor_sets {
        lookup.insert(ns.solar_customer_id.as_str(), ns);
    }
    let cal = &dataset.calendar;
    solar
        .par_iter()
        .map(|rec| {
            let ns = lookup.get(rec.customer_id.as_str()).ok_or_else(|| {
                Error::Config(format!("no neighbour set for solar customer {}", rec.customer_id))
            })?;
            let u_hat = estimate_native(ns, dataset)?;
            let v = rec
                .net_generation()
                .ok_or_else(|| Error::Contract(format!("{} has no net_generation", rec.customer_id)))?;
            let mut r = correct_generation(rec.net_consumption(), &u_hat, v)?;
            r.actual = rec.total_generation().cloned();
            r.night_corrections = (0..r.len())
                .filter(|&t| !cal.is_daytime(t) && r.w[t] > 0.0)
                .count();
            Ok(r)
        })
        .collect()
}
