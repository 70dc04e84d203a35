//! Synthetic AMI and weather generator with ground-truth total generation.
//!
//! All randomness comes from ChaCha8 streams. The weather stream is seeded
//! from `SHA-256(seed_le ‖ "weather")` and each customer's stream from
//! `SHA-256(seed_le ‖ customer_id)`, so generation order and thread count
//! never change the output.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, Duration, FixedOffset, Timelike, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io;
use crate::model::{
    build_calendar, parse_timestamp, Calendar, Channel, CustomerRecord, Dataset, DaytimeSpec, IntervalSeries,
    MonthWindows,
};
use crate::weather::{interval_weights, Group, WeatherObservation, WeatherTable};

pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9); stream seed = SHA-256(seed as u64 little-endian || label)";

/// Energies are rounded to multiples of this so the capping identities hold
/// without floating-point residue.
pub const QUANTUM_KWH: f64 = 1.0 / 1024.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Archetype {
    pub name: String,
    pub base_kw: f64,
    pub morning_kw: f64,
    pub morning_hour: f64,
    pub evening_kw: f64,
    pub evening_hour: f64,
    pub weekend_multiplier: f64,
    pub noise_kw: f64,
}

impl Archetype {
    #[allow(clippy::too_many_arguments)]
    fn new(name: &str, base: f64, mk: f64, mh: f64, ek: f64, eh: f64, wk: f64, noise: f64) -> Self {
        Archetype {
            name: name.into(),
            base_kw: base,
            morning_kw: mk,
            morning_hour: mh,
            evening_kw: ek,
            evening_hour: eh,
            weekend_multiplier: wk,
            noise_kw: noise,
        }
    }

    /// Mean demand in kW at fractional hour-of-day `h`.
    pub fn demand_kw(&self, h: f64, weekend: bool) -> f64 {
        let bump = |peak: f64, width: f64| {
            // circular distance so a 23:00 peak spills into early morning
            let mut d = (h - peak).abs();
            d = d.min(24.0 - d);
            (-(d * d) / (2.0 * width * width)).exp()
        };
        let kw = self.base_kw + self.morning_kw * bump(self.morning_hour, 1.5) + self.evening_kw * bump(self.evening_hour, 2.0);
        if weekend {
            kw * self.weekend_multiplier
        } else {
            kw
        }
    }
}

pub fn default_archetypes() -> Vec<Archetype> {
    vec![
        Archetype::new("commuter", 0.35, 0.8, 7.0, 1.6, 19.0, 1.15, 0.08),
        Archetype::new("home_day", 0.55, 0.5, 9.0, 1.0, 18.0, 1.05, 0.08),
        Archetype::new("late_evening", 0.40, 0.3, 9.5, 1.4, 21.5, 1.10, 0.08),
        Archetype::new("early_riser", 0.30, 1.0, 6.0, 1.0, 18.0, 1.20, 0.08),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeatherParams {
    pub p_rainy: f64,
    pub p_cloudy: f64,
    pub p_fair: f64,
    /// Probability that a day repeats the previous day's group.
    pub persistence: f64,
    pub start_group: Option<Group>,
    /// Probability that an hour's condition comes from the day's own group.
    pub within_day: f64,
}

impl Default for WeatherParams {
    fn default() -> Self {
        WeatherParams {
            p_rainy: 0.2,
            p_cloudy: 0.3,
            p_fair: 0.5,
            persistence: 0.5,
            start_group: None,
            within_day: 0.8,
        }
    }
}

impl WeatherParams {
    pub fn prob(&self, g: Group) -> f64 {
        match g {
            Group::Rainy => self.p_rainy,
            Group::Cloudy => self.p_cloudy,
            Group::Fair => self.p_fair,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Clearness {
    pub rainy: f64,
    pub cloudy: f64,
    pub fair: f64,
}

impl Default for Clearness {
    fn default() -> Self {
        Clearness {
            rainy: 0.2,
            cloudy: 0.5,
            fair: 0.95,
        }
    }
}

impl Clearness {
    pub fn of(&self, g: Group) -> f64 {
        match g {
            Group::Rainy => self.rainy,
            Group::Cloudy => self.cloudy,
            Group::Fair => self.fair,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PvParams {
    pub capacity_min_kw: f64,
    pub capacity_max_kw: f64,
    /// Peak output per kW of capacity under clear sky.
    pub peak_fraction: f64,
    /// Relative amplitude of the annual cycle (peak at the June solstice).
    pub seasonal_amplitude: f64,
    /// Per-interval multiplicative noise σ.
    pub noise: f64,
}

impl Default for PvParams {
    fn default() -> Self {
        PvParams {
            capacity_min_kw: 2.0,
            capacity_max_kw: 6.0,
            peak_fraction: 0.8,
            seasonal_amplitude: 0.3,
            noise: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_nonsolar: usize,
    pub n_solar: usize,
    pub days: usize,
    pub interval_minutes: u32,
    pub start: DateTime<FixedOffset>,
    pub archetypes: Vec<Archetype>,
    pub weather: WeatherParams,
    pub clearness: Clearness,
    pub pv: PvParams,
    /// Fraction of solar customers whose total generation is also metered.
    pub spo_fraction: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    pub daytime: MonthWindows,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            n_nonsolar: 200,
            n_solar: 40,
            days: 365,
            interval_minutes: 60,
            start: parse_timestamp("2023-01-01T00:00:00-08:00").expect("valid literal"),
            archetypes: default_archetypes(),
            weather: WeatherParams::default(),
            clearness: Clearness::default(),
            pv: PvParams::default(),
            spo_fraction: 0.2,
            scale_min: 0.7,
            scale_max: 1.3,
            daytime: MonthWindows::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_nonsolar == 0 || self.n_solar == 0 || self.days == 0 {
            return bad("synth counts (n_nonsolar, n_solar, days) must be ≥ 1".into());
        }
        if self.interval_minutes == 0 || 1440 % self.interval_minutes != 0 {
            return bad(format!("synth interval {} min must divide a day", self.interval_minutes));
        }
        if self.archetypes.is_empty() {
            return bad("synth needs at least one archetype".into());
        }
        for a in &self.archetypes {
            let vals = [a.base_kw, a.morning_kw, a.evening_kw, a.weekend_multiplier, a.noise_kw];
            if vals.iter().any(|v| !v.is_finite() || *v < 0.0) || a.base_kw <= 0.0 {
                return bad(format!("archetype {} has invalid parameters", a.name));
            }
        }
        let w = &self.weather;
        let ps = [w.p_rainy, w.p_cloudy, w.p_fair];
        if ps.iter().any(|p| !(0.0..=1.0).contains(p)) || (ps.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("weather probabilities {ps:?} must be in [0,1] and sum to 1"));
        }
        if !(0.0..=1.0).contains(&w.persistence) || !(0.0..=1.0).contains(&w.within_day) {
            return bad("persistence and within_day must lie in [0, 1]".into());
        }
        let c = &self.clearness;
        if !(c.rainy > 0.0 && c.rainy < c.cloudy && c.cloudy < c.fair && c.fair <= 1.0) {
            return bad(format!(
                "clearness must satisfy 0 < rainy < cloudy < fair ≤ 1, got {} {} {}",
                c.rainy, c.cloudy, c.fair
            ));
        }
        let pv = &self.pv;
        if !(pv.capacity_min_kw >= 0.0 && pv.capacity_min_kw <= pv.capacity_max_kw && pv.capacity_max_kw.is_finite()) {
            return bad("pv capacity range must satisfy 0 ≤ min ≤ max".into());
        }
        if !(pv.peak_fraction > 0.0 && (0.0..1.0).contains(&pv.seasonal_amplitude) && pv.noise >= 0.0) {
            return bad("pv shape parameters out of range".into());
        }
        if !(0.0..=1.0).contains(&self.spo_fraction) {
            return bad("spo_fraction must lie in [0, 1]".into());
        }
        if !(self.scale_min > 0.0 && self.scale_min <= self.scale_max) {
            return bad("scale range must satisfy 0 < min ≤ max".into());
        }
        Ok(())
    }

    pub fn n_intervals(&self) -> usize {
        self.days * (1440 / self.interval_minutes as usize)
    }

    pub fn calendar(&self) -> Result<Calendar> {
        build_calendar(
            self.start,
            self.n_intervals(),
            self.interval_minutes,
            &DaytimeSpec::Window(self.daytime.clone()),
        )
    }
}

pub fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

const RAINY_CONDITIONS: &[&str] = &["Rain", "Heavy Rain"];
const CLOUDY_CONDITIONS: &[&str] = &["Cloudy", "Mostly Cloudy", "Partly Cloudy", "Light Rain", "Fog", "Haze", "Mist"];
const FAIR_CONDITIONS: &[&str] = &["Fair", "Windy"];

fn conditions(g: Group) -> &'static [&'static str] {
    match g {
        Group::Rainy => RAINY_CONDITIONS,
        Group::Cloudy => CLOUDY_CONDITIONS,
        Group::Fair => FAIR_CONDITIONS,
    }
}

fn draw_group(rng: &mut ChaCha8Rng, p: &WeatherParams) -> Group {
    let x: f64 = rng.random();
    if x < p.p_rainy {
        Group::Rainy
    } else if x < p.p_rainy + p.p_cloudy {
        Group::Cloudy
    } else {
        Group::Fair
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthWeather {
    pub day_groups: Vec<Group>,
    /// Hourly observations covering every day.
    pub observations: Vec<WeatherObservation>,
}

pub fn gen_weather(config: &SynthConfig) -> Result<SynthWeather> {
    config.validate()?;
    let p = &config.weather;
    let mut rng = stream(config.seed, "weather");
    let mut day_groups = Vec::with_capacity(config.days);
    let mut observations = Vec::with_capacity(config.days * 24);
    for d in 0..config.days {
        let g = match day_groups.last() {
            None => match p.start_group {
                Some(g) => g,
                None => draw_group(&mut rng, p),
            },
            Some(&prev) => {
                if rng.random::<f64>() < p.persistence {
                    prev
                } else {
                    draw_group(&mut rng, p)
                }
            }
        };
        day_groups.push(g);
        for h in 0..24 {
            let hour_group = if rng.random::<f64>() < p.within_day {
                g
            } else {
                match g {
                    Group::Rainy | Group::Fair => Group::Cloudy,
                    Group::Cloudy => {
                        if rng.random::<bool>() {
                            Group::Rainy
                        } else {
                            Group::Fair
                        }
                    }
                }
            };
            let list = conditions(hour_group);
            let cond = list[rng.random_range(0..list.len())];
            observations.push(WeatherObservation {
                timestamp: config.start + Duration::hours((d * 24 + h) as i64),
                condition: cond.to_string(),
                daylight: None,
            });
        }
    }
    Ok(SynthWeather {
        day_groups,
        observations,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolarTruth {
    pub customer_id: String,
    pub capacity_kw: f64,
    pub native_load: Vec<f64>,
    pub total_generation: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthTruth {
    pub solar: Vec<SolarTruth>,
}

impl SynthTruth {
    pub fn get(&self, id: &str) -> Option<&SolarTruth> {
        self.solar.iter().find(|s| s.customer_id == id)
    }
}

fn quantize(x: f64) -> f64 {
    (x / QUANTUM_KWH).round() * QUANTUM_KWH
}

/// Net-meter capping: `(u, v) = (min(0, G − L), max(0, G − L))`.
pub fn cap_meters(g: f64, l: f64) -> (f64, f64) {
    let d = g - l;
    if d < 0.0 {
        (d, 0.0)
    } else {
        (0.0, d)
    }
}

pub fn nonsolar_id(k: usize) -> String {
    format!("N{k:04}")
}

pub fn solar_id(k: usize) -> String {
    format!("S{k:04}")
}

/// Whether the `k`-th of `n` solar customers is an SPO-style customer; spreads
/// `round(n·f)` of them evenly through the list.
pub fn is_spo(k: usize, fraction: f64) -> bool {
    ((k + 1) as f64 * fraction).floor() > (k as f64 * fraction).floor()
}

struct Spec {
    id: String,
    archetype: usize,
    solar: bool,
    spo: bool,
}

struct Generated {
    record: CustomerRecord,
    truth: Option<SolarTruth>,
}

fn clearsky(cal: &Calendar, windows: &MonthWindows, t: usize) -> f64 {
    let ts = cal.timestamp(t);
    let minute = ts.hour() as f64 * 60.0 + ts.minute() as f64 + cal.interval_minutes() as f64 / 2.0;
    let (s, e) = windows.get(ts.month());
    let (s, e) = (s as f64, e as f64);
    if minute < s || minute >= e || e <= s {
        return 0.0;
    }
    (std::f64::consts::PI * (minute - s) / (e - s)).sin()
}

fn generate_one(
    spec: &Spec,
    config: &SynthConfig,
    cal: &Calendar,
    groups: &[Group],
) -> Result<Generated> {
    let mut rng = stream(config.seed, &spec.id);
    let arch = &config.archetypes[spec.archetype];
    let scale = config.scale_min + (config.scale_max - config.scale_min) * rng.random::<f64>();
    let capacity = if spec.solar {
        config.pv.capacity_min_kw + (config.pv.capacity_max_kw - config.pv.capacity_min_kw) * rng.random::<f64>()
    } else {
        0.0
    };
    let hours = cal.interval_hours();
    let n = cal.n_intervals();
    let noise = Normal::new(0.0, arch.noise_kw.max(f64::MIN_POSITIVE)).map_err(|e| Error::Config(e.to_string()))?;
    let pv_noise = Normal::new(0.0, config.pv.noise.max(f64::MIN_POSITIVE)).map_err(|e| Error::Config(e.to_string()))?;
    let floor_kw = 0.05 * arch.base_kw * scale;

    let mut load = Vec::with_capacity(n);
    let mut gen = Vec::with_capacity(n);
    for t in 0..n {
        let ts = cal.timestamp(t);
        let h = ts.hour() as f64 + (ts.minute() as f64 + cal.interval_minutes() as f64 / 2.0) / 60.0;
        let weekend = matches!(ts.weekday(), Weekday::Sat | Weekday::Sun);
        let kw = (arch.demand_kw(h, weekend) * scale + noise.sample(&mut rng)).max(floor_kw);
        load.push(quantize(kw * hours).max(QUANTUM_KWH));
        if spec.solar {
            let cs = clearsky(cal, &config.daytime, t);
            let doy = ts.ordinal() as f64;
            let season = 1.0 + config.pv.seasonal_amplitude * (2.0 * std::f64::consts::PI * (doy - 172.0) / 365.25).cos();
            let jitter = (1.0 + pv_noise.sample(&mut rng)).max(0.0);
            let kw = capacity * config.pv.peak_fraction * cs * season * config.clearness.of(groups[t]) * jitter;
            gen.push(quantize(kw * hours));
        }
    }

    if !spec.solar {
        let u: Vec<f64> = load.iter().map(|l| -l).collect();
        let record = CustomerRecord::new(
            spec.id.clone(),
            vec![IntervalSeries::complete(spec.id.clone(), Channel::NetConsumption, u)],
        )?;
        return Ok(Generated { record, truth: None });
    }

    let (u, v): (Vec<f64>, Vec<f64>) = gen.iter().zip(&load).map(|(&g, &l)| cap_meters(g, l)).unzip();
    let mut channels = vec![
        IntervalSeries::complete(spec.id.clone(), Channel::NetConsumption, u.clone()),
        IntervalSeries::complete(spec.id.clone(), Channel::NetGeneration, v.clone()),
    ];
    if spec.spo {
        channels.push(IntervalSeries::complete(spec.id.clone(), Channel::TotalGeneration, gen.clone()));
    }
    Ok(Generated {
        record: CustomerRecord::new(spec.id.clone(), channels)?,
        truth: Some(SolarTruth {
            customer_id: spec.id.clone(),
            capacity_kw: capacity,
            native_load: load,
            total_generation: gen,
            u,
            v,
        }),
    })
}

/// Non-solar customers come first, then solar; archetypes are assigned
/// round-robin within each kind so every solar archetype has non-solar peers.
pub fn gen_customers(config: &SynthConfig, weather: &SynthWeather) -> Result<(Dataset, SynthTruth)> {
    config.validate()?;
    let cal = config.calendar()?;
    let groups = interval_weights(&weather.observations, &cal, &WeatherTable::default())?.groups;
    let na = config.archetypes.len();
    let specs: Vec<Spec> = (0..config.n_nonsolar)
        .map(|k| Spec {
            id: nonsolar_id(k),
            archetype: k % na,
            solar: false,
            spo: false,
        })
        .chain((0..config.n_solar).map(|k| Spec {
            id: solar_id(k),
            archetype: k % na,
            solar: true,
            spo: is_spo(k, config.spo_fraction),
        }))
        .collect();
    let generated: Vec<Generated> = specs
        .par_iter()
        .map(|s| generate_one(s, config, &cal, &groups))
        .collect::<Result<_>>()?;
    let mut customers = Vec::with_capacity(generated.len());
    let mut solar = Vec::new();
    for g in generated {
        customers.push(g.record);
        solar.extend(g.truth);
    }
    let dataset = Dataset::new(cal, customers, weather.observations.clone())?;
    Ok((dataset, SynthTruth { solar }))
}

pub fn generate(config: &SynthConfig) -> Result<(Dataset, SynthTruth)> {
    let weather = gen_weather(config)?;
    gen_customers(config, &weather)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmittedPaths {
    pub meters: PathBuf,
    pub weather: PathBuf,
    pub truth: PathBuf,
    pub manifest: PathBuf,
}

/// Writes `meters.csv`, `weather.csv`, `truth.csv` and `synth_manifest.txt`
/// into `dir`. `extra_manifest` is appended verbatim to the manifest.
pub fn emit_dataset(dataset: &Dataset, truth: &SynthTruth, dir: &Path, extra_manifest: &str) -> Result<EmittedPaths> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = EmittedPaths {
        meters: dir.join("meters.csv"),
        weather: dir.join("weather.csv"),
        truth: dir.join("truth.csv"),
        manifest: dir.join("synth_manifest.txt"),
    };
    io::write_meter_csv(dataset, &paths.meters)?;
    io::write_weather_csv(&dataset.weather, &paths.weather)?;
    let rows: Vec<(String, Vec<f64>)> = truth
        .solar
        .iter()
        .map(|s| (s.customer_id.clone(), s.total_generation.clone()))
        .collect();
    io::write_truth_csv(&dataset.calendar, &rows, &paths.truth)?;
    let mut manifest = format!(
        "rng: {RNG_ALGORITHM}\nquantum_kwh: {QUANTUM_KWH}\ncustomers: {}\nsolar: {}\nintervals: {}\n",
        dataset.customers.len(),
        truth.solar.len(),
        dataset.calendar.n_intervals()
    );
    manifest.push_str(extra_manifest);
    std::fs::write(&paths.manifest, manifest).map_err(|e| Error::io(&paths.manifest, e))?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_nonsolar: 8,
            n_solar: 5,
            days: 14,
            ..Default::default()
        }
    }

    #[test]
    fn capping_arithmetic() {
        assert_eq!(cap_meters(5.0, 2.0), (0.0, 3.0));
        assert_eq!(cap_meters(1.0, 2.5), (-1.5, 0.0));
        assert_eq!(cap_meters(0.0, 0.0), (0.0, 0.0));
    }

    #[test]
    fn full_persistence_keeps_start_group() {
        let mut c = small();
        c.weather.persistence = 1.0;
        c.weather.start_group = Some(Group::Rainy);
        let w = gen_weather(&c).unwrap();
        assert!(w.day_groups.iter().all(|&g| g == Group::Rainy));
    }

    #[test]
    fn weather_is_deterministic() {
        let c = small();
        assert_eq!(gen_weather(&c).unwrap(), gen_weather(&c).unwrap());
        let mut other = small();
        other.seed = 43;
        assert_ne!(gen_weather(&c).unwrap().day_groups, gen_weather(&other).unwrap().day_groups);
    }

    #[test]
    fn fair_share_near_its_probability() {
        let c = SynthConfig::default();
        assert_eq!(c.weather.p_fair, 0.5);
        let w = gen_weather(&c).unwrap();
        let fair = w.day_groups.iter().filter(|&&g| g == Group::Fair).count() as f64 / 365.0;
        assert!((0.4..=0.6).contains(&fair), "fair share {fair}");
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = small();
        c.weather.p_fair = 0.6;
        assert!(c.validate().is_err());
        let mut c = small();
        c.clearness.cloudy = 0.1;
        assert!(c.validate().is_err());
        let mut c = small();
        c.n_solar = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_capacity_solar_is_pure_load() {
        let mut c = small();
        c.pv.capacity_min_kw = 0.0;
        c.pv.capacity_max_kw = 0.0;
        let (ds, truth) = generate(&c).unwrap();
        for s in &truth.solar {
            assert!(s.total_generation.iter().all(|&g| g == 0.0));
            assert!(s.v.iter().all(|&v| v == 0.0));
            let neg: Vec<f64> = s.native_load.iter().map(|l| -l).collect();
            assert_eq!(s.u, neg);
            assert_eq!(ds.get(&s.customer_id).unwrap().net_consumption().values, neg);
        }
    }

    #[test]
    fn capping_identities_hold_exactly() {
        let (_, truth) = generate(&small()).unwrap();
        for s in &truth.solar {
            for t in 0..s.u.len() {
                assert_eq!(s.u[t] * s.v[t], 0.0);
                assert_eq!(s.native_load[t], s.u[t].abs() + (s.total_generation[t] - s.v[t]));
                assert_eq!(s.v[t] + (s.native_load[t] - s.u[t].abs()), s.total_generation[t]);
            }
        }
    }

    #[test]
    fn rainy_days_generate_less_than_fair_days() {
        let mut c = small();
        c.days = 120;
        let w = gen_weather(&c).unwrap();
        let (ds, truth) = gen_customers(&c, &w).unwrap();
        for s in &truth.solar {
            let mut sums = [(0.0, 0usize); 3];
            for (d, day) in ds.calendar.days().iter().enumerate() {
                let e: f64 = s.total_generation[day.intervals.clone()].iter().sum();
                let k = w.day_groups[d] as usize;
                sums[k].0 += e;
                sums[k].1 += 1;
            }
            let mean = |k: usize| sums[k].0 / sums[k].1 as f64;
            assert!(mean(Group::Rainy as usize) < mean(Group::Fair as usize), "{}", s.customer_id);
        }
    }

    #[test]
    fn spo_fraction_spread() {
        let spo: Vec<usize> = (0..40).filter(|&k| is_spo(k, 0.2)).collect();
        assert_eq!(spo, vec![4, 9, 14, 19, 24, 29, 34, 39]);
        assert!((0..10).all(|k| !is_spo(k, 0.0)));
        assert!((0..10).all(|k| is_spo(k, 1.0)));
    }

    #[test]
    fn archetypes_round_robin_give_peers() {
        let c = small();
        let (ds, _) = generate(&c).unwrap();
        assert_eq!(ds.non_solar().count(), 8);
        assert_eq!(ds.solar().count(), 5);
        // one in five solar customers meters total generation
        assert_eq!(ds.solar().filter(|r| r.total_generation().is_some()).count(), 1);
    }

    #[test]
    fn truth_rows_and_round_trip() {
        let c = small();
        let (ds, truth) = generate(&c).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = emit_dataset(&ds, &truth, dir.path(), "").unwrap();
        let body = std::fs::read_to_string(&p.truth).unwrap();
        assert_eq!(body.lines().count() - 1, c.n_solar * c.n_intervals());
        let opts = io::IngestOptions {
            daytime: io::DaytimeMode::Window(c.daytime.clone()),
            ..Default::default()
        };
        let (back, rep) = io::ingest(&p.meters, &p.weather, &opts).unwrap();
        assert_eq!(rep.gap_intervals, 0);
        assert_eq!(back, ds);
    }
}
