//! CSV readers and writers for every file the tool consumes or produces.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a value
//! read back parses to the identical `f64`.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, FixedOffset};

use crate::error::{Error, Result};
use crate::metrics::ValidationReport;
use crate::model::{
    align_customer, build_calendar, canonicalize_signs, format_timestamp, parse_timestamp, Calendar, Channel,
    CustomerRecord, Dataset, DaytimeSpec, MonthWindows, RawCustomer, RawReading, SignConvention, SignPolicy,
};
use crate::reconstruction::{EstimatedConsumption, ReconstructionResult};
use crate::scenario::{CustomerAnnual, FeederAggregate, Scenario};
use crate::similarity::{Neighbor, NeighborSet, SimilarityMatrix};
use crate::weather::{daylight_flags, WeatherObservation};

pub const METER_HEADER: &[&str] = &["timestamp", "customer_id", "channel", "value_kwh"];
pub const TRUTH_HEADER: &[&str] = &["timestamp", "customer_id", "total_generation_kwh"];
pub const MATRIX_HEADER: &[&str] = &["solar_id", "nonsolar_id", "delta_kwh", "excluded_days"];
pub const NEIGHBOR_HEADER: &[&str] = &["solar_id", "member_id", "delta_kwh", "threshold", "fallback_used"];
pub const RECONSTRUCTION_HEADER: &[&str] = &[
    "timestamp",
    "customer_id",
    "u_kwh",
    "u_hat_kwh",
    "v_kwh",
    "w_kwh",
    "g_hat_kwh",
    "native_hat_kwh",
];

fn file_name(path: &Path) -> String {
    path.display().to_string()
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(f))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::Parse {
            file: file_name(path),
            line,
            detail: format!("{kind:?}"),
        },
    }
}

fn header_fields(rdr: &mut csv::Reader<File>, path: &Path) -> Result<Vec<String>> {
    Ok(rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(|s| s.to_string())
        .collect())
}

fn expect_header(found: &[String], expected: &[&str], path: &Path) -> Result<()> {
    if found.len() < expected.len() || found.iter().zip(expected).any(|(a, b)| a != b) {
        return Err(Error::Parse {
            file: file_name(path),
            line: 1,
            detail: format!("expected header {:?}, found {:?}", expected.join(","), found.join(",")),
        });
    }
    Ok(())
}

struct Row<'a> {
    path: &'a Path,
    line: u64,
    rec: csv::StringRecord,
}

impl Row<'_> {
    fn err(&self, detail: impl Into<String>) -> Error {
        Error::Parse {
            file: file_name(self.path),
            line: self.line,
            detail: detail.into(),
        }
    }

    fn field(&self, k: usize, name: &str) -> Result<&str> {
        self.rec.get(k).ok_or_else(|| self.err(format!("missing field {name}")))
    }

    fn timestamp(&self, k: usize) -> Result<DateTime<FixedOffset>> {
        let s = self.field(k, "timestamp")?;
        parse_timestamp(s).map_err(|e| self.err(format!("bad timestamp {s:?}: {e}")))
    }

    fn float(&self, k: usize, name: &str) -> Result<f64> {
        let s = self.field(k, name)?;
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(format!("bad {name} value {s:?}"))),
        }
    }

    fn opt_float(&self, k: usize, name: &str) -> Result<Option<f64>> {
        if self.field(k, name)?.is_empty() {
            Ok(None)
        } else {
            self.float(k, name).map(Some)
        }
    }
}

fn rows<'a>(rdr: &'a mut csv::Reader<File>, path: &'a Path) -> impl Iterator<Item = Result<Row<'a>>> + 'a {
    rdr.records().map(move |r| match r {
        Ok(rec) => Ok(Row {
            path,
            line: rec.position().map_or(0, |p| p.line()),
            rec,
        }),
        Err(e) => Err(csv_err(path, e)),
    })
}

/// Reads the meter file, grouping rows by customer in order of first appearance.
pub fn read_meter_csv(path: &Path) -> Result<Vec<RawCustomer>> {
    let mut rdr = open_csv(path)?;
    let header = header_fields(&mut rdr, path)?;
    expect_header(&header, METER_HEADER, path)?;
    let mut order: Vec<RawCustomer> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for row in rows(&mut rdr, path) {
        let row = row?;
        let ts = row.timestamp(0)?;
        let id = row.field(1, "customer_id")?;
        if id.is_empty() {
            return Err(row.err("empty customer_id"));
        }
        let channel: Channel = row.field(2, "channel")?.parse().map_err(|e: String| row.err(e))?;
        if channel == Channel::NativeLoad {
            return Err(row.err("native_load is not a metered channel"));
        }
        let value = row.float(3, "value_kwh")?;
        let k = *index.entry(id.to_string()).or_insert_with(|| {
            order.push(RawCustomer {
                customer_id: id.to_string(),
                rows: BTreeMap::new(),
            });
            order.len() - 1
        });
        order[k].rows.entry(channel).or_default().push(RawReading {
            timestamp: ts,
            value,
            line: row.line,
        });
    }
    Ok(order)
}

pub fn read_weather_csv(path: &Path) -> Result<Vec<WeatherObservation>> {
    let mut rdr = open_csv(path)?;
    let header = header_fields(&mut rdr, path)?;
    expect_header(&header, &["timestamp", "condition"], path)?;
    let has_daylight = header.get(2).is_some_and(|h| h == "daylight");
    let mut out = Vec::new();
    for row in rows(&mut rdr, path) {
        let row = row?;
        let daylight = if has_daylight {
            match row.field(2, "daylight")? {
                "1" => Some(true),
                "0" => Some(false),
                other => return Err(row.err(format!("daylight must be 0 or 1, got {other:?}"))),
            }
        } else {
            None
        };
        out.push(WeatherObservation {
            timestamp: row.timestamp(0)?,
            condition: row.field(1, "condition")?.to_string(),
            daylight,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum DaytimeMode {
    /// Use the weather file's daylight column when present, else the window.
    Auto(MonthWindows),
    Window(MonthWindows),
    Flag,
}

impl Default for DaytimeMode {
    fn default() -> Self {
        DaytimeMode::Auto(MonthWindows::default())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IngestOptions {
    pub interval_minutes: u32,
    pub sign_convention: SignConvention,
    pub sign_policy: SignPolicy,
    pub daytime: DaytimeMode,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            interval_minutes: 60,
            sign_convention: SignConvention::ConsumptionNegative,
            sign_policy: SignPolicy::default(),
            daytime: DaytimeMode::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IngestReport {
    pub customers: usize,
    pub solar: usize,
    pub spo: usize,
    pub n_intervals: usize,
    pub unmatched_rows: usize,
    pub gap_intervals: usize,
    pub sign_clamps: usize,
    pub used_daylight_flags: bool,
}

/// Builds a dataset from raw rows and weather observations.
pub fn assemble_dataset(
    raw: &[RawCustomer],
    weather: Vec<WeatherObservation>,
    options: &IngestOptions,
) -> Result<(Dataset, IngestReport)> {
    let mut first: Option<DateTime<FixedOffset>> = None;
    let mut last: Option<DateTime<FixedOffset>> = None;
    for r in raw.iter().flat_map(|c| c.rows.values().flatten()) {
        if first.map_or(true, |f| r.timestamp < f) {
            first = Some(r.timestamp);
        }
        if last.map_or(true, |l| r.timestamp > l) {
            last = Some(r.timestamp);
        }
    }
    let (Some(start), Some(end)) = (first, last) else {
        return Err(Error::Config("meter file has no rows".into()));
    };
    let step = options.interval_minutes as i64 * 60;
    if step <= 0 {
        return Err(Error::Config("interval length must be positive".into()));
    }
    let n = ((end - start).num_seconds() / step) as usize + 1;
    let window_cal = |w: &MonthWindows| build_calendar(start, n, options.interval_minutes, &DaytimeSpec::Window(w.clone()));
    let (calendar, used_flags) = match &options.daytime {
        DaytimeMode::Window(w) => (window_cal(w)?, false),
        DaytimeMode::Auto(w) => {
            let base = window_cal(w)?;
            match daylight_flags(&weather, &base) {
                Some(flags) => (base.with_daytime(&DaytimeSpec::Flags(flags))?, true),
                None => (base, false),
            }
        }
        DaytimeMode::Flag => {
            let base = window_cal(&MonthWindows::default())?;
            let flags = daylight_flags(&weather, &base).ok_or_else(|| {
                Error::Config("daytime.mode = flag but the weather file has no daylight column".into())
            })?;
            (base.with_daytime(&DaytimeSpec::Flags(flags))?, true)
        }
    };

    let mut report = IngestReport {
        n_intervals: n,
        used_daylight_flags: used_flags,
        ..Default::default()
    };
    let mut customers = Vec::with_capacity(raw.len());
    for rc in raw {
        let aligned = align_customer(rc, &calendar)?;
        report.unmatched_rows += aligned.unmatched.len();
        let mut series = Vec::new();
        for (_, s) in aligned.record.channels {
            let (s, rep) = canonicalize_signs(s, options.sign_convention, &options.sign_policy)?;
            report.sign_clamps += rep.clamped;
            report.gap_intervals += s.gap_count();
            series.push(s);
        }
        let rec = CustomerRecord::new(rc.customer_id.clone(), series)?;
        report.solar += rec.kind.is_solar() as usize;
        report.spo += rec.total_generation().is_some() as usize;
        customers.push(rec);
    }
    report.customers = customers.len();
    Ok((Dataset::new(calendar, customers, weather)?, report))
}

pub fn ingest(meters: &Path, weather: &Path, options: &IngestOptions) -> Result<(Dataset, IngestReport)> {
    let raw = read_meter_csv(meters)?;
    let obs = read_weather_csv(weather)?;
    assemble_dataset(&raw, obs, options)
}

pub struct CsvOut {
    path: std::path::PathBuf,
    w: BufWriter<File>,
}

impl CsvOut {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
        }
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = CsvOut {
            path: path.to_path_buf(),
            w: BufWriter::new(f),
        };
        out.line(format_args!("{}", header.join(",")))?;
        Ok(out)
    }

    pub fn line(&mut self, args: std::fmt::Arguments<'_>) -> Result<()> {
        self.w
            .write_fmt(args)
            .and_then(|_| self.w.write_all(b"\n"))
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes every non-gap value, customer by customer in dataset order.
pub fn write_meter_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let cal = &dataset.calendar;
    let stamps: Vec<String> = (0..cal.n_intervals()).map(|t| cal.format_timestamp(t)).collect();
    let mut out = CsvOut::create(path, METER_HEADER)?;
    for c in &dataset.customers {
        for (ch, s) in &c.channels {
            for t in 0..s.len() {
                if !s.gaps[t] {
                    out.line(format_args!("{},{},{},{}", stamps[t], c.customer_id, ch, s.values[t]))?;
                }
            }
        }
    }
    out.finish()
}

pub fn write_weather_csv(observations: &[WeatherObservation], path: &Path) -> Result<()> {
    let daylight = !observations.is_empty() && observations.iter().all(|o| o.daylight.is_some());
    let header: &[&str] = if daylight {
        &["timestamp", "condition", "daylight"]
    } else {
        &["timestamp", "condition"]
    };
    let mut out = CsvOut::create(path, header)?;
    for o in observations {
        let ts = format_timestamp(&o.timestamp);
        match o.daylight {
            Some(d) if daylight => out.line(format_args!("{},{},{}", ts, o.condition, d as u8))?,
            _ => out.line(format_args!("{},{}", ts, o.condition))?,
        }
    }
    out.finish()
}

pub fn write_truth_csv(calendar: &Calendar, truth: &[(String, Vec<f64>)], path: &Path) -> Result<()> {
    let stamps: Vec<String> = (0..calendar.n_intervals()).map(|t| calendar.format_timestamp(t)).collect();
    let mut out = CsvOut::create(path, TRUTH_HEADER)?;
    for (id, g) in truth {
        for (t, v) in g.iter().enumerate() {
            out.line(format_args!("{},{},{}", stamps[t], id, v))?;
        }
    }
    out.finish()
}

pub fn read_truth_csv(path: &Path, calendar: &Calendar) -> Result<Vec<(String, Vec<f64>)>> {
    let mut rdr = open_csv(path)?;
    let header = header_fields(&mut rdr, path)?;
    expect_header(&header, TRUTH_HEADER, path)?;
    let mut out: Vec<(String, Vec<f64>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for row in rows(&mut rdr, path) {
        let row = row?;
        let ts = row.timestamp(0)?;
        let t = calendar
            .index_of(&ts)
            .ok_or_else(|| row.err("timestamp outside the meter calendar"))?;
        let id = row.field(1, "customer_id")?.to_string();
        let v = row.float(2, "total_generation_kwh")?;
        let k = *index.entry(id.clone()).or_insert_with(|| {
            out.push((id, vec![0.0; calendar.n_intervals()]));
            out.len() - 1
        });
        out[k].1[t] = v;
    }
    Ok(out)
}

pub fn write_matrix_csv(m: &SimilarityMatrix, path: &Path) -> Result<()> {
    let mut out = CsvOut::create(path, MATRIX_HEADER)?;
    for i in 0..m.n_solar() {
        for j in 0..m.n_nonsolar() {
            out.line(format_args!(
                "{},{},{},{}",
                m.solar_ids[i],
                m.nonsolar_ids[j],
                opt(m.get(i, j)),
                m.excluded_days(i, j)
            ))?;
        }
    }
    out.finish()
}

pub fn write_neighbors_csv(sets: &[NeighborSet], path: &Path) -> Result<()> {
    let mut out = CsvOut::create(path, NEIGHBOR_HEADER)?;
    for ns in sets {
        for m in &ns.members {
            out.line(format_args!(
                "{},{},{},{},{}",
                ns.solar_customer_id, m.customer_id, m.delta, ns.threshold, ns.fallback_used
            ))?;
        }
    }
    out.finish()
}

pub fn read_neighbors_csv(path: &Path) -> Result<Vec<NeighborSet>> {
    let mut rdr = open_csv(path)?;
    let header = header_fields(&mut rdr, path)?;
    expect_header(&header, NEIGHBOR_HEADER, path)?;
    let mut sets: Vec<NeighborSet> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for row in rows(&mut rdr, path) {
        let row = row?;
        let solar = row.field(0, "solar_id")?.to_string();
        let member = row.field(1, "member_id")?.to_string();
        let delta = row.float(2, "delta_kwh")?;
        let threshold = row.float(3, "threshold")?;
        let fallback = match row.field(4, "fallback_used")? {
            "true" => true,
            "false" => false,
            other => return Err(row.err(format!("fallback_used must be true/false, got {other:?}"))),
        };
        let k = *index.entry(solar.clone()).or_insert_with(|| {
            sets.push(NeighborSet {
                solar_customer_id: solar,
                members: Vec::new(),
                threshold,
                fallback_used: fallback,
            });
            sets.len() - 1
        });
        sets[k].members.push(Neighbor {
            customer_id: member,
            delta,
        });
    }
    Ok(sets)
}

pub fn write_reconstruction_csv(calendar: &Calendar, results: &[ReconstructionResult], path: &Path) -> Result<()> {
    let stamps: Vec<String> = (0..calendar.n_intervals()).map(|t| calendar.format_timestamp(t)).collect();
    let mut out = CsvOut::create(path, RECONSTRUCTION_HEADER)?;
    for r in results {
        for t in 0..r.len() {
            let gap = r.gaps[t];
            // a gapped row cannot tell which of u or v was missing; leave both blank
            let u = if gap { String::new() } else { r.u[t].to_string() };
            let v = if gap { String::new() } else { r.v[t].to_string() };
            let uh = if r.u_hat.gaps[t] { String::new() } else { r.u_hat.values[t].to_string() };
            out.line(format_args!(
                "{},{},{},{},{},{},{},{}",
                stamps[t], r.solar_customer_id, u, uh, v, r.w[t], r.g_hat[t], r.native_hat[t]
            ))?;
        }
    }
    out.finish()
}

/// Reads a reconstruction file back; `actual` is attached from the dataset.
pub fn read_reconstruction_csv(path: &Path, dataset: &Dataset) -> Result<Vec<ReconstructionResult>> {
    let cal = &dataset.calendar;
    let n = cal.n_intervals();
    let mut rdr = open_csv(path)?;
    let header = header_fields(&mut rdr, path)?;
    expect_header(&header, RECONSTRUCTION_HEADER, path)?;
    let mut out: Vec<ReconstructionResult> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut seen: Vec<Vec<bool>> = Vec::new();
    for row in rows(&mut rdr, path) {
        let row = row?;
        let ts = row.timestamp(0)?;
        let t = cal
            .index_of(&ts)
            .ok_or_else(|| row.err("timestamp outside the meter calendar"))?;
        let id = row.field(1, "customer_id")?.to_string();
        let rec = dataset
            .get(&id)
            .ok_or_else(|| row.err(format!("customer {id} not in meter data")))?;
        let k = *index.entry(id.clone()).or_insert_with(|| {
            out.push(ReconstructionResult {
                solar_customer_id: id.clone(),
                u: vec![0.0; n],
                u_hat: EstimatedConsumption {
                    values: vec![0.0; n],
                    gaps: vec![true; n],
                },
                v: vec![0.0; n],
                w: vec![0.0; n],
                g_hat: vec![0.0; n],
                native_hat: vec![0.0; n],
                gaps: vec![true; n],
                actual: rec.total_generation().cloned(),
                withheld: 0,
                night_corrections: 0,
            });
            seen.push(vec![false; n]);
            out.len() - 1
        });
        if seen[k][t] {
            return Err(row.err(format!("duplicate row for {id}")));
        }
        seen[k][t] = true;
        let r = &mut out[k];
        let u = row.opt_float(2, "u_kwh")?;
        let uh = row.opt_float(3, "u_hat_kwh")?;
        let v = row.opt_float(4, "v_kwh")?;
        r.w[t] = row.float(5, "w_kwh")?;
        r.g_hat[t] = row.float(6, "g_hat_kwh")?;
        r.native_hat[t] = row.float(7, "native_hat_kwh")?;
        r.gaps[t] = u.is_none() || v.is_none();
        r.u[t] = u.unwrap_or(0.0);
        r.v[t] = v.unwrap_or(0.0);
        if let Some(uh) = uh {
            r.u_hat.values[t] = uh;
            r.u_hat.gaps[t] = false;
        } else if !r.gaps[t] {
            r.withheld += 1;
        }
        if !cal.is_daytime(t) && r.w[t] > 0.0 {
            r.night_corrections += 1;
        }
    }
    for (k, s) in seen.iter().enumerate() {
        if s.iter().any(|&x| !x) {
            return Err(Error::Parse {
                file: file_name(path),
                line: 0,
                detail: format!("{} is missing intervals", out[k].solar_customer_id),
            });
        }
    }
    Ok(out)
}

pub fn write_annual_csv(annual: &[CustomerAnnual], path: &Path) -> Result<()> {
    let mut out = CsvOut::create(path, &["customer_id", "solar", "annual_generation_kwh", "annual_native_kwh"])?;
    for a in annual {
        out.line(format_args!(
            "{},{},{},{}",
            a.customer_id, a.solar, a.annual_generation, a.annual_native
        ))?;
    }
    out.finish()
}

pub fn write_scenario_manifest(scenarios: &[Scenario], path: &Path) -> Result<()> {
    let mut out = CsvOut::create(path, &["scenario", "customer_id", "copies"])?;
    for s in scenarios {
        for (id, k) in &s.members {
            out.line(format_args!("{},{},{}", s.name, id, k))?;
        }
    }
    out.finish()
}

pub fn write_monthly_csv(rollups: &[(&str, &FeederAggregate)], path: &Path) -> Result<()> {
    let mut out = CsvOut::create(path, &["scenario", "month", "consumption_kwh", "generation_kwh"])?;
    for (name, agg) in rollups {
        for m in &agg.monthly {
            out.line(format_args!("{},{},{},{}", name, m.month, m.consumption, m.generation))?;
        }
    }
    out.finish()
}

pub fn write_feeder_csv(calendar: &Calendar, rollups: &[(&str, &FeederAggregate)], path: &Path) -> Result<()> {
    let mut out = CsvOut::create(path, &["scenario", "timestamp", "consumption_kwh", "generation_kwh"])?;
    for (name, agg) in rollups {
        for t in 0..calendar.n_intervals() {
            out.line(format_args!(
                "{},{},{},{}",
                name,
                calendar.format_timestamp(t),
                agg.consumption[t],
                agg.generation[t]
            ))?;
        }
    }
    out.finish()
}

/// Writes `summary.txt`, `annual_error.csv`, `monthly_mape.csv` and
/// `hour_month_grid.csv` into `dir`.
pub fn write_report(report: &ValidationReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let summary = dir.join("summary.txt");
    std::fs::write(&summary, report.summary()).map_err(|e| Error::io(&summary, e))?;

    let mut out = CsvOut::create(&dir.join("annual_error.csv"), &["customer_id", "net_pct_error", "est_pct_error"])?;
    let est: HashMap<&str, f64> = report
        .annual_est
        .per_customer
        .iter()
        .map(|(id, e)| (id.as_str(), *e))
        .collect();
    for (id, e) in &report.annual_net.per_customer {
        out.line(format_args!("{},{},{}", id, e, opt(est.get(id.as_str()).copied())))?;
    }
    out.finish()?;

    let mut out = CsvOut::create(
        &dir.join("monthly_mape.csv"),
        &["month", "net_mape_pct", "est_mape_pct", "customers"],
    )?;
    for m in 0..12 {
        out.line(format_args!(
            "{},{},{},{}",
            m + 1,
            opt(report.monthly_net.values[m]),
            opt(report.monthly_est.values[m]),
            report.monthly_net.customers[m]
        ))?;
    }
    out.finish()?;

    let mut out = CsvOut::create(
        &dir.join("hour_month_grid.csv"),
        &["hour", "month", "net_mape_pct", "est_mape_pct", "diff_pct"],
    )?;
    for h in 0..24 {
        for m in 0..12 {
            out.line(format_args!(
                "{},{},{},{},{}",
                h,
                m + 1,
                opt(report.grid.net.cells[h][m]),
                opt(report.grid.est.cells[h][m]),
                opt(report.grid.diff.cells[h][m])
            ))?;
        }
    }
    out.finish()
}

/// Generic numeric CSV table for plotting: header plus rows of optional numbers
/// (first `text_cols` columns kept as strings).
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = open_csv(path)?;
    let header = header_fields(&mut rdr, path)?;
    let mut out = Vec::new();
    for row in rows(&mut rdr, path) {
        let row = row?;
        out.push(row.rec.iter().map(|s| s.to_string()).collect());
    }
    Ok(Table { header, rows: out })
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}
