//! Validation of generation estimates against metered total generation.

use crate::error::{Error, Result};
use crate::model::Calendar;
use crate::reconstruction::ReconstructionResult;

/// Σ estimated / Σ actual over every customer and interval.
pub fn capture_ratio(estimated: &[&[f64]], actual: &[&[f64]]) -> Result<f64> {
    if estimated.len() != actual.len() {
        return Err(Error::Alignment(format!(
            "{} estimated series for {} actual series",
            estimated.len(),
            actual.len()
        )));
    }
    let est: f64 = estimated.iter().map(|s| s.iter().sum::<f64>()).sum();
    let act: f64 = actual.iter().map(|s| s.iter().sum::<f64>()).sum();
    if act <= 0.0 {
        return Err(Error::ZeroDenominator("capture ratio"));
    }
    Ok(est / act)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnualError {
    /// `100 × (actual − candidate) / actual` per customer.
    pub per_customer: Vec<(String, f64)>,
    /// Customers with zero actual generation.
    pub excluded: Vec<String>,
    pub mean: f64,
    /// Sample standard deviation across customers (0 for a single customer).
    pub std_dev: f64,
}

pub fn annual_percent_error(ids: &[&str], candidate: &[&[f64]], actual: &[&[f64]]) -> Result<AnnualError> {
    if ids.len() != candidate.len() || ids.len() != actual.len() {
        return Err(Error::Alignment("annual error inputs differ in length".into()));
    }
    let mut per_customer = Vec::new();
    let mut excluded = Vec::new();
    for ((id, c), a) in ids.iter().zip(candidate).zip(actual) {
        let a_sum: f64 = a.iter().sum();
        let c_sum: f64 = c.iter().sum();
        if a_sum > 0.0 {
            per_customer.push((id.to_string(), 100.0 * (a_sum - c_sum) / a_sum));
        } else {
            excluded.push(id.to_string());
        }
    }
    let n = per_customer.len();
    let (mean, std_dev) = if n == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let mean = per_customer.iter().map(|(_, e)| e).sum::<f64>() / n as f64;
        let sd = if n > 1 {
            let ss: f64 = per_customer.iter().map(|(_, e)| (e - mean) * (e - mean)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        (mean, sd)
    };
    Ok(AnnualError {
        per_customer,
        excluded,
        mean,
        std_dev,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonthlyMape {
    /// Indexed by month − 1; `None` when no customer had generation that month.
    pub values: [Option<f64>; 12],
    pub customers: [usize; 12],
    /// (customer, month) buckets skipped for zero actual energy.
    pub excluded: usize,
}

fn check_shapes(candidate: &[&[f64]], actual: &[&[f64]], calendar: &Calendar) -> Result<()> {
    if candidate.len() != actual.len() {
        return Err(Error::Alignment("candidate/actual customer counts differ".into()));
    }
    let n = calendar.n_intervals();
    if candidate.iter().chain(actual).any(|s| s.len() != n) {
        return Err(Error::Alignment(format!("series length differs from calendar ({n})")));
    }
    Ok(())
}

/// Monthly MAPE averaged across customers, in percent.
pub fn monthly_mape(candidate: &[&[f64]], actual: &[&[f64]], calendar: &Calendar) -> Result<MonthlyMape> {
    check_shapes(candidate, actual, calendar)?;
    let months: Vec<usize> = (0..calendar.n_intervals()).map(|t| calendar.month(t) as usize - 1).collect();
    let mut sum = [0.0f64; 12];
    let mut customers = [0usize; 12];
    let mut excluded = 0usize;
    for (c, a) in candidate.iter().zip(actual) {
        let mut a_m = [0.0f64; 12];
        let mut c_m = [0.0f64; 12];
        let mut present = [false; 12];
        for (t, &m) in months.iter().enumerate() {
            a_m[m] += a[t];
            c_m[m] += c[t];
            present[m] = true;
        }
        for m in 0..12 {
            if !present[m] {
                continue;
            }
            if a_m[m] > 0.0 {
                sum[m] += (a_m[m] - c_m[m]).abs() / a_m[m];
                customers[m] += 1;
            } else {
                excluded += 1;
            }
        }
    }
    let mut values = [None; 12];
    for m in 0..12 {
        if customers[m] > 0 {
            values[m] = Some(100.0 * sum[m] / customers[m] as f64);
        }
    }
    Ok(MonthlyMape {
        values,
        customers,
        excluded,
    })
}

/// Hour-of-day (rows) × month (columns) grid; absent cells are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub cells: [[Option<f64>; 12]; 24],
}

impl Grid {
    pub fn get(&self, hour: usize, month: u32) -> Option<f64> {
        self.cells[hour][month as usize - 1]
    }
}

/// Bucketed MAPE in percent. With `capacity`, the bucket error is expressed
/// as a share of installed capacity times the bucket's duration instead of
/// actual energy.
pub fn hour_month_mape(
    candidate: &[&[f64]],
    actual: &[&[f64]],
    calendar: &Calendar,
    capacity: Option<&[f64]>,
) -> Result<Grid> {
    check_shapes(candidate, actual, calendar)?;
    if let Some(cap) = capacity {
        if cap.len() != actual.len() {
            return Err(Error::Alignment("one capacity per customer required".into()));
        }
    }
    let n = calendar.n_intervals();
    let bucket: Vec<(usize, usize)> = (0..n)
        .map(|t| (calendar.hour(t) as usize, calendar.month(t) as usize - 1))
        .collect();
    let mut sum = [[0.0f64; 12]; 24];
    let mut count = [[0usize; 12]; 24];
    for (k, (c, a)) in candidate.iter().zip(actual).enumerate() {
        let mut a_b = [[0.0f64; 12]; 24];
        let mut c_b = [[0.0f64; 12]; 24];
        let mut len = [[0usize; 12]; 24];
        for (t, &(h, m)) in bucket.iter().enumerate() {
            a_b[h][m] += a[t];
            c_b[h][m] += c[t];
            len[h][m] += 1;
        }
        for h in 0..24 {
            for m in 0..12 {
                if a_b[h][m] <= 0.0 {
                    continue;
                }
                let denom = match capacity {
                    Some(cap) => cap[k] * len[h][m] as f64 * calendar.interval_hours(),
                    None => a_b[h][m],
                };
                if denom <= 0.0 {
                    continue;
                }
                sum[h][m] += (a_b[h][m] - c_b[h][m]).abs() / denom;
                count[h][m] += 1;
            }
        }
    }
    let mut cells = [[None; 12]; 24];
    for h in 0..24 {
        for m in 0..12 {
            if count[h][m] > 0 {
                cells[h][m] = Some(100.0 * sum[h][m] / count[h][m] as f64);
            }
        }
    }
    Ok(Grid { cells })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HourMonthGrid {
    pub net: Grid,
    pub est: Grid,
    /// `net − est`; positive where the reconstruction improved the bucket.
    pub diff: Grid,
}

pub fn hour_month_mape_grid(
    net: &[&[f64]],
    est: &[&[f64]],
    actual: &[&[f64]],
    calendar: &Calendar,
    capacity: Option<&[f64]>,
) -> Result<HourMonthGrid> {
    let net_g = hour_month_mape(net, actual, calendar, capacity)?;
    let est_g = hour_month_mape(est, actual, calendar, capacity)?;
    let mut diff = [[None; 12]; 24];
    for h in 0..24 {
        for m in 0..12 {
            if let (Some(a), Some(b)) = (net_g.cells[h][m], est_g.cells[h][m]) {
                diff[h][m] = Some(a - b);
            }
        }
    }
    Ok(HourMonthGrid {
        net: net_g,
        est: est_g,
        diff: Grid { cells: diff },
    })
}

/// One customer with metered total generation. Intervals missing from any of
/// the three series are zeroed in all of them.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationCustomer {
    pub customer_id: String,
    pub actual: Vec<f64>,
    pub net: Vec<f64>,
    pub est: Vec<f64>,
}

/// Customers of `reconstructions` that carry a total-generation channel.
pub fn validation_cohort(reconstructions: &[ReconstructionResult]) -> Result<Vec<ValidationCustomer>> {
    let cohort: Vec<ValidationCustomer> = reconstructions
        .iter()
        .filter_map(|r| {
            let actual = r.actual.as_ref()?;
            let n = r.len();
            let mut out = ValidationCustomer {
                customer_id: r.solar_customer_id.clone(),
                actual: vec![0.0; n],
                net: vec![0.0; n],
                est: vec![0.0; n],
            };
            for t in 0..n {
                if r.gaps[t] || actual.gaps[t] {
                    continue;
                }
                out.actual[t] = actual.values[t];
                out.net[t] = r.v[t];
                out.est[t] = r.g_hat[t];
            }
            Some(out)
        })
        .collect();
    if cohort.is_empty() {
        return Err(Error::NoTruth(
            "no customer has a total_generation channel".into(),
        ));
    }
    Ok(cohort)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub customers: Vec<String>,
    pub capture_ratio_net: f64,
    pub capture_ratio_est: f64,
    pub annual_net: AnnualError,
    pub annual_est: AnnualError,
    pub monthly_net: MonthlyMape,
    pub monthly_est: MonthlyMape,
    pub grid: HourMonthGrid,
}

pub fn validate(cohort: &[ValidationCustomer], calendar: &Calendar, capacity: Option<&[f64]>) -> Result<ValidationReport> {
    if cohort.is_empty() {
        return Err(Error::NoTruth("empty validation cohort".into()));
    }
    let ids: Vec<&str> = cohort.iter().map(|c| c.customer_id.as_str()).collect();
    let actual: Vec<&[f64]> = cohort.iter().map(|c| c.actual.as_slice()).collect();
    let net: Vec<&[f64]> = cohort.iter().map(|c| c.net.as_slice()).collect();
    let est: Vec<&[f64]> = cohort.iter().map(|c| c.est.as_slice()).collect();
    Ok(ValidationReport {
        customers: ids.iter().map(|s| s.to_string()).collect(),
        capture_ratio_net: capture_ratio(&net, &actual)?,
        capture_ratio_est: capture_ratio(&est, &actual)?,
        annual_net: annual_percent_error(&ids, &net, &actual)?,
        annual_est: annual_percent_error(&ids, &est, &actual)?,
        monthly_net: monthly_mape(&net, &actual, calendar)?,
        monthly_est: monthly_mape(&est, &actual, calendar)?,
        grid: hour_month_mape_grid(&net, &est, &actual, calendar, capacity)?,
    })
}

impl ValidationReport {
    /// Plain-text summary block.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("customers: {}\n", self.customers.len()));
        s.push_str(&format!("capture_ratio_net: {:.4}\n", self.capture_ratio_net));
        s.push_str(&format!("capture_ratio_est: {:.4}\n", self.capture_ratio_est));
        s.push_str(&format!(
            "annual_pct_error_net: mean {:.2} sd {:.2}\n",
            self.annual_net.mean, self.annual_net.std_dev
        ));
        s.push_str(&format!(
            "annual_pct_error_est: mean {:.2} sd {:.2}\n",
            self.annual_est.mean, self.annual_est.std_dev
        ));
        if !self.annual_net.excluded.is_empty() {
            s.push_str(&format!(
                "excluded_zero_actual: {}\n",
                self.annual_net.excluded.join(" ")
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_calendar, parse_timestamp, DaytimeSpec};

    fn cal(n: usize) -> Calendar {
        let start = parse_timestamp("2023-01-01T00:00:00+00:00").unwrap();
        build_calendar(start, n, 60, &DaytimeSpec::default()).unwrap()
    }

    #[test]
    fn capture_examples() {
        let est = [25.0, 50.0];
        let act = [40.0, 60.0];
        assert_eq!(capture_ratio(&[&est], &[&act]).unwrap(), 0.75);
        assert_eq!(capture_ratio(&[&act], &[&act]).unwrap(), 1.0);
        assert!(capture_ratio(&[&est], &[&[0.0, 0.0]]).is_err());
    }

    #[test]
    fn annual_examples() {
        let e = annual_percent_error(&["a"], &[&[52.0]], &[&[100.0]]).unwrap();
        assert!((e.per_customer[0].1 - 48.0).abs() < 1e-9);
        let e = annual_percent_error(&["a", "b"], &[&[7.0], &[1.0]], &[&[7.0], &[0.0]]).unwrap();
        assert_eq!(e.per_customer, vec![("a".to_string(), 0.0)]);
        assert_eq!(e.excluded, vec!["b".to_string()]);
        // overestimate stays negative
        let e = annual_percent_error(&["a"], &[&[120.0]], &[&[100.0]]).unwrap();
        assert!((e.mean + 20.0).abs() < 1e-9);
    }

    #[test]
    fn annual_mean_and_sd_match_direct_formula() {
        let act: Vec<Vec<f64>> = vec![vec![10.0, 30.0], vec![50.0], vec![8.0, 2.0]];
        let cand: Vec<Vec<f64>> = vec![vec![5.0, 15.0], vec![40.0], vec![9.0, 2.0]];
        // spreadsheet: 50, 20, -10 -> mean 20, sd sqrt(((30)^2+0+(30)^2)/2) = 30
        let ids = ["a", "b", "c"];
        let a: Vec<&[f64]> = act.iter().map(|v| v.as_slice()).collect();
        let c: Vec<&[f64]> = cand.iter().map(|v| v.as_slice()).collect();
        let e = annual_percent_error(&ids, &c, &a).unwrap();
        assert!((e.mean - 20.0).abs() < 1e-9);
        assert!((e.std_dev - 30.0).abs() < 1e-9);
    }

    #[test]
    fn monthly_examples() {
        let calendar = cal(48);
        let mut act = vec![0.0; 48];
        act[12] = 10.0;
        let mut half = act.clone();
        half[12] = 5.0;
        let m = monthly_mape(&[&act], &[&act], &calendar).unwrap();
        assert_eq!(m.values[0], Some(0.0));
        let m = monthly_mape(&[&half], &[&act], &calendar).unwrap();
        assert!((m.values[0].unwrap() - 50.0).abs() < 1e-9);
        assert_eq!(m.values[5], None);
        let zero = vec![0.0; 48];
        let m = monthly_mape(&[&zero], &[&zero], &calendar).unwrap();
        assert_eq!(m.values[0], None);
        assert_eq!(m.excluded, 1);
    }

    #[test]
    fn grid_identity_and_night_cells() {
        let calendar = cal(48);
        let act: Vec<f64> = (0..48).map(|t| if (8..16).contains(&(t % 24)) { 2.0 } else { 0.0 }).collect();
        let net: Vec<f64> = act.iter().map(|a| a * 0.5).collect();
        let g = hour_month_mape_grid(&[&net], &[&act], &[&act], &calendar, None).unwrap();
        for h in 0..24 {
            let day = (8..16).contains(&h);
            assert_eq!(g.est.get(h, 1), day.then_some(0.0));
            assert_eq!(g.diff.get(h, 1), g.net.get(h, 1));
            if !day {
                assert_eq!(g.diff.get(h, 1), None);
            }
        }
        assert_eq!(g.net.get(10, 1), Some(50.0));
    }

    #[test]
    fn capacity_normalised_grid() {
        let calendar = cal(24);
        let mut act = vec![0.0; 24];
        act[12] = 4.0;
        let net = vec![0.0; 24];
        let g = hour_month_mape(&[&net], &[&act], &calendar, Some(&[8.0])).unwrap();
        assert_eq!(g.get(12, 1), Some(50.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn pointwise_larger_estimate_captures_more(
                rows in proptest::collection::vec((0.0f64..5.0, 0.0f64..5.0, 0.01f64..5.0), 1..50)
            ) {
                let v: Vec<f64> = rows.iter().map(|r| r.0).collect();
                let g: Vec<f64> = rows.iter().map(|r| r.0 + r.1).collect();
                let a: Vec<f64> = rows.iter().map(|r| r.2).collect();
                let net = capture_ratio(&[&v], &[&a]).unwrap();
                let est = capture_ratio(&[&g], &[&a]).unwrap();
                prop_assert!(est >= net);
                prop_assert_eq!(capture_ratio(&[&a], &[&a]).unwrap(), 1.0);
            }

            #[test]
            fn estimate_between_net_and_actual_has_smaller_error(
                actual in 1.0f64..100.0, net_frac in 0.0f64..1.0, est_frac in 0.0f64..1.0,
            ) {
                let net = actual * net_frac;
                let est = net + (actual - net) * est_frac;
                let n = annual_percent_error(&["a"], &[&[net]], &[&[actual]]).unwrap();
                let e = annual_percent_error(&["a"], &[&[est]], &[&[actual]]).unwrap();
                prop_assert!(e.per_customer[0].1 <= n.per_customer[0].1 + 1e-12);
            }

            #[test]
            fn mape_is_non_negative(
                vals in proptest::collection::vec((0.0f64..5.0, 0.0f64..5.0), 48)
            ) {
                let calendar = cal(48);
                let c: Vec<f64> = vals.iter().map(|r| r.0).collect();
                let a: Vec<f64> = vals.iter().map(|r| r.1).collect();
                let m = monthly_mape(&[&c], &[&a], &calendar).unwrap();
                prop_assert!(m.values.iter().flatten().all(|&x| x >= 0.0));
                let g = hour_month_mape(&[&c], &[&a], &calendar, None).unwrap();
                prop_assert!(g.cells.iter().flatten().flatten().all(|&x| x >= 0.0));
            }
        }
    }
}
