//! Flat `key = value` run configuration.
//!
//! Assignments are layered defaults < file < `--set`; the merged assignment
//! map is echoed canonically (sorted, one per line) and hashed into every
//! manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::{DaytimeMode, IngestOptions};
use crate::model::{parse_timestamp, MonthWindows, SignConvention};
use crate::scenario::ScenarioOptions;
use crate::similarity::{GapRule, SelectionRule};
use crate::synth::{Archetype, SynthConfig};
use crate::weather::{Group, GroupWeights, WeatherTable};

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub targets: Vec<f64>,
    pub tolerance: f64,
    pub seed: u64,
    pub name: Option<String>,
    pub options: ScenarioOptions,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            targets: vec![0.2],
            tolerance: 0.01,
            seed: 42,
            name: None,
            options: ScenarioOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub meters: Option<PathBuf>,
    pub weather: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub capacity: Option<PathBuf>,
    pub neighbors: Option<PathBuf>,
    pub reconstruction: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub ingest: IngestOptions,
    pub weights: GroupWeights,
    pub unknown_condition_group: Option<Group>,
    pub conditions: Vec<(String, Group)>,
    pub gap: GapRule,
    pub selection: SelectionRule,
    pub scenario: ScenarioConfig,
    pub synth: SynthConfig,
    /// Canonical `key = value` lines of every explicit assignment.
    pub echo: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::resolve(&BTreeMap::new()).expect("defaults resolve")
    }
}

/// Parses a config file body into ordered assignments.
pub fn parse_assignments(body: &str, source: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in body.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("{source}:{}: expected `key = value`, got {raw:?}", i + 1))
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Config(format!("{source}:{}: empty key", i + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn parse_set(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--set expects key=value, got {s:?}")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Decodes a condition key: `_` is a space, `%XX` a hex byte.
pub fn decode_condition_key(s: &str) -> Result<String> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'_' => out.push(b' '),
            b'%' => {
                let hex = s
                    .get(i + 1..i + 3)
                    .and_then(|h| u8::from_str_radix(h, 16).ok())
                    .ok_or_else(|| Error::Config(format!("bad escape in condition key {s:?}")))?;
                out.push(hex);
                i += 2;
            }
            b => out.push(b),
        }
        i += 1;
    }
    String::from_utf8(out).map_err(|_| Error::Config(format!("condition key {s:?} is not UTF-8")))
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| Error::Config(format!("{key} = {v:?}: {e}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key} = {v:?}: expected true/false"))),
    }
}

/// `HH:MM` to minutes after midnight; `24:00` allowed as an end bound.
fn parse_clock(key: &str, v: &str) -> Result<u32> {
    let err = || Error::Config(format!("{key} = {v:?}: expected HH:MM"));
    let (h, m) = v.split_once(':').ok_or_else(err)?;
    let h: u32 = h.parse().map_err(|_| err())?;
    let m: u32 = m.parse().map_err(|_| err())?;
    if m >= 60 || h > 24 || (h == 24 && m > 0) {
        return Err(err());
    }
    Ok(h * 60 + m)
}

fn archetype_field(a: &mut Archetype, field: &str, key: &str, v: &str) -> Result<()> {
    match field {
        "name" => a.name = v.to_string(),
        "base_kw" => a.base_kw = parse(key, v)?,
        "morning_kw" => a.morning_kw = parse(key, v)?,
        "morning_hour" => a.morning_hour = parse(key, v)?,
        "evening_kw" => a.evening_kw = parse(key, v)?,
        "evening_hour" => a.evening_hour = parse(key, v)?,
        "weekend_multiplier" => a.weekend_multiplier = parse(key, v)?,
        "noise_kw" => a.noise_kw = parse(key, v)?,
        _ => return Err(Error::Config(format!("unknown key {key}"))),
    }
    Ok(())
}

impl RunConfig {
    /// Builds a config from file contents (if any) and overrides.
    pub fn load(file: Option<&Path>, sets: &[(String, String)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        if let Some(p) = file {
            let body = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            for (k, v) in parse_assignments(&body, &p.display().to_string())? {
                map.insert(k, v);
            }
        }
        for (k, v) in sets {
            map.insert(k.clone(), v.clone());
        }
        Self::resolve(&map)
    }

    pub fn resolve(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = RunConfig {
            meters: None,
            weather: None,
            truth: None,
            capacity: None,
            neighbors: None,
            reconstruction: None,
            out_dir: PathBuf::from("out"),
            ingest: IngestOptions::default(),
            weights: GroupWeights::default(),
            unknown_condition_group: None,
            conditions: Vec::new(),
            gap: GapRule::default(),
            selection: SelectionRule::default(),
            scenario: ScenarioConfig::default(),
            synth: SynthConfig::default(),
            echo: String::new(),
        };
        let mut daytime_mode = "auto".to_string();
        let mut window = (None, None);
        let mut month_windows: BTreeMap<u32, (Option<u32>, Option<u32>)> = BTreeMap::new();
        let mut archetype_sets: Vec<(usize, String, String, String)> = Vec::new();

        for (key, v) in map {
            let k = key.as_str();
            let v = v.as_str();
            let s = &mut cfg.synth;
            match k {
                "meters" => cfg.meters = Some(v.into()),
                "weather" => cfg.weather = Some(v.into()),
                "truth" => cfg.truth = Some(v.into()),
                "capacity" => cfg.capacity = Some(v.into()),
                "neighbors" => cfg.neighbors = Some(v.into()),
                "reconstruction" => cfg.reconstruction = Some(v.into()),
                "out_dir" => cfg.out_dir = v.into(),
                "interval_minutes" => cfg.ingest.interval_minutes = parse(k, v)?,
                "sign_convention" => cfg.ingest.sign_convention = parse::<SignConvention>(k, v)?,
                "sign.epsilon" => cfg.ingest.sign_policy.epsilon = parse(k, v)?,
                "sign.max_clamp_fraction" => cfg.ingest.sign_policy.max_clamp_fraction = parse(k, v)?,
                "weight.rainy" => cfg.weights.rainy = parse(k, v)?,
                "weight.cloudy" => cfg.weights.cloudy = parse(k, v)?,
                "weight.fair" => cfg.weights.fair = parse(k, v)?,
                "unknown_condition_group" => {
                    cfg.unknown_condition_group = if v.is_empty() || v == "none" {
                        None
                    } else {
                        Some(parse::<Group>(k, v)?)
                    }
                }
                "daytime.mode" => daytime_mode = v.to_string(),
                "daytime.start" => window.0 = Some(parse_clock(k, v)?),
                "daytime.end" => window.1 = Some(parse_clock(k, v)?),
                "selection.sigma" => cfg.selection.sigma = parse(k, v)?,
                "selection.fallback_k" => cfg.selection.fallback_k = parse(k, v)?,
                "gap.max_day_fraction" => cfg.gap.max_day_gap_fraction = parse(k, v)?,
                "scenario.target" => {
                    cfg.scenario.targets = v
                        .split(',')
                        .map(|t| parse::<f64>(k, t.trim()))
                        .collect::<Result<_>>()?
                }
                "scenario.tolerance" => cfg.scenario.tolerance = parse(k, v)?,
                "scenario.seed" => cfg.scenario.seed = parse(k, v)?,
                "scenario.name" => cfg.scenario.name = Some(v.to_string()),
                "scenario.with_replacement" => cfg.scenario.options.with_replacement = parse_bool(k, v)?,
                "scenario.max_members" => cfg.scenario.options.max_members = Some(parse(k, v)?),
                "scenario.restarts" => cfg.scenario.options.restarts = parse(k, v)?,
                "synth.seed" => s.seed = parse(k, v)?,
                "synth.n_nonsolar" => s.n_nonsolar = parse(k, v)?,
                "synth.n_solar" => s.n_solar = parse(k, v)?,
                "synth.days" => s.days = parse(k, v)?,
                "synth.interval_minutes" => s.interval_minutes = parse(k, v)?,
                "synth.start" => {
                    s.start = parse_timestamp(v).map_err(|e| Error::Config(format!("{k} = {v:?}: {e}")))?
                }
                "synth.p_rainy" => s.weather.p_rainy = parse(k, v)?,
                "synth.p_cloudy" => s.weather.p_cloudy = parse(k, v)?,
                "synth.p_fair" => s.weather.p_fair = parse(k, v)?,
                "synth.persistence" => s.weather.persistence = parse(k, v)?,
                "synth.within_day" => s.weather.within_day = parse(k, v)?,
                "synth.start_group" => s.weather.start_group = Some(parse(k, v)?),
                "synth.clearness.rainy" => s.clearness.rainy = parse(k, v)?,
                "synth.clearness.cloudy" => s.clearness.cloudy = parse(k, v)?,
                "synth.clearness.fair" => s.clearness.fair = parse(k, v)?,
                "synth.pv.capacity_min_kw" => s.pv.capacity_min_kw = parse(k, v)?,
                "synth.pv.capacity_max_kw" => s.pv.capacity_max_kw = parse(k, v)?,
                "synth.pv.peak_fraction" => s.pv.peak_fraction = parse(k, v)?,
                "synth.pv.seasonal_amplitude" => s.pv.seasonal_amplitude = parse(k, v)?,
                "synth.pv.noise" => s.pv.noise = parse(k, v)?,
                "synth.spo_fraction" => s.spo_fraction = parse(k, v)?,
                "synth.scale_min" => s.scale_min = parse(k, v)?,
                "synth.scale_max" => s.scale_max = parse(k, v)?,
                "synth.archetypes" => {
                    let n: usize = parse(k, v)?;
                    if n == 0 {
                        return Err(Error::Config("synth.archetypes must be ≥ 1".into()));
                    }
                    let defaults = crate::synth::default_archetypes();
                    s.archetypes = (0..n).map(|i| defaults[i % defaults.len()].clone()).collect();
                }
                _ => {
                    if let Some(rest) = k.strip_prefix("condition.") {
                        cfg.conditions.push((decode_condition_key(rest)?, parse(k, v)?));
                    } else if let Some(rest) = k.strip_prefix("daytime.month.") {
                        let (m, which) = rest
                            .split_once('.')
                            .ok_or_else(|| Error::Config(format!("unknown key {k}")))?;
                        let m: u32 = parse(k, m)?;
                        if !(1..=12).contains(&m) {
                            return Err(Error::Config(format!("{k}: month must be 1..=12")));
                        }
                        let e = month_windows.entry(m).or_default();
                        match which {
                            "start" => e.0 = Some(parse_clock(k, v)?),
                            "end" => e.1 = Some(parse_clock(k, v)?),
                            _ => return Err(Error::Config(format!("unknown key {k}"))),
                        }
                    } else if let Some(rest) = k.strip_prefix("synth.archetype.") {
                        let (idx, field) = rest
                            .split_once('.')
                            .ok_or_else(|| Error::Config(format!("unknown key {k}")))?;
                        archetype_sets.push((parse(k, idx)?, field.to_string(), k.to_string(), v.to_string()));
                    } else {
                        return Err(Error::Config(format!("unknown key {k}")));
                    }
                }
            }
        }

        for (idx, field, key, v) in &archetype_sets {
            let n = cfg.synth.archetypes.len();
            let a = cfg.synth.archetypes.get_mut(*idx).ok_or_else(|| {
                Error::Config(format!("{key}: archetype index {idx} out of range (have {n}; set synth.archetypes)"))
            })?;
            archetype_field(a, field, key, v)?;
        }

        let (ws, we) = (window.0.unwrap_or(360), window.1.unwrap_or(1200));
        let mut windows = MonthWindows::uniform(ws, we)?;
        for (m, (s, e)) in &month_windows {
            let (ds, de) = windows.get(*m);
            windows.set(*m, s.unwrap_or(ds), e.unwrap_or(de))?;
        }
        cfg.synth.daytime = windows.clone();
        cfg.ingest.daytime = match daytime_mode.as_str() {
            "auto" => DaytimeMode::Auto(windows),
            "window" => DaytimeMode::Window(windows),
            "flag" => DaytimeMode::Flag,
            other => return Err(Error::Config(format!("daytime.mode = {other:?}: expected auto|window|flag"))),
        };
        cfg.weights.validate()?;
        if !(0.0..=1.0).contains(&cfg.gap.max_day_gap_fraction) {
            return Err(Error::Config("gap.max_day_fraction must lie in [0, 1]".into()));
        }
        if cfg.selection.fallback_k == 0 {
            return Err(Error::Config("selection.fallback_k must be ≥ 1".into()));
        }
        if cfg.scenario.targets.is_empty() {
            return Err(Error::Config("scenario.target needs at least one value".into()));
        }
        cfg.echo = map.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        Ok(cfg)
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.echo.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn weather_table(&self) -> Result<WeatherTable> {
        let mut t = WeatherTable::new(self.weights)?;
        for (cond, g) in &self.conditions {
            t.set_condition(cond, *g);
        }
        t.set_unknown_group(self.unknown_condition_group);
        Ok(t)
    }

    pub fn require_inputs(&self) -> Result<(&Path, &Path)> {
        let m = self
            .meters
            .as_deref()
            .ok_or_else(|| Error::Config("no meter file configured (set meters = PATH)".into()))?;
        let w = self
            .weather
            .as_deref()
            .ok_or_else(|| Error::Config("no weather file configured (set weather = PATH)".into()))?;
        Ok((m, w))
    }

    /// Manifest header: config hash and canonical echo.
    pub fn manifest_header(&self) -> String {
        let mut s = format!("config_sha256: {}\n", self.hash());
        for line in self.echo.lines() {
            s.push_str("config: ");
            s.push_str(line);
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::SigmaKind;

    fn from(body: &str, sets: &[&str]) -> Result<RunConfig> {
        let mut map = BTreeMap::new();
        for (k, v) in parse_assignments(body, "test")? {
            map.insert(k, v);
        }
        for s in sets {
            let (k, v) = parse_set(s)?;
            map.insert(k, v);
        }
        RunConfig::resolve(&map)
    }

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.weights, GroupWeights::default());
        assert_eq!(c.selection.fallback_k, 10);
        assert_eq!(c.selection.sigma, SigmaKind::Sample);
        assert_eq!(c.scenario.tolerance, 0.01);
        assert_eq!(c.synth, SynthConfig::default());
        assert_eq!(c.echo, "");
    }

    #[test]
    fn set_overrides_file() {
        let c = from("weight.fair = 0.01 # text value\nscenario.seed=3\n", &["scenario.seed=9"]).unwrap();
        assert_eq!(c.weights.fair, 0.01);
        assert_eq!(c.scenario.seed, 9);
        assert_eq!(c.echo, "scenario.seed = 9\nweight.fair = 0.01\n");
    }

    #[test]
    fn unknown_key_is_config_error() {
        let e = from("wieght.fair = 1\n", &[]).unwrap_err();
        assert_eq!(e.code().as_str(), "E_CONFIG");
    }

    #[test]
    fn non_positive_weight_rejected() {
        assert!(from("weight.rainy = 0\n", &[]).is_err());
    }

    #[test]
    fn condition_keys_decode() {
        assert_eq!(decode_condition_key("Heavy_Rain").unwrap(), "Heavy Rain");
        assert_eq!(decode_condition_key("Thunder%2DStorm").unwrap(), "Thunder-Storm");
        let c = from("condition.Freezing_Rain = Rainy\n", &[]).unwrap();
        let t = c.weather_table().unwrap();
        assert_eq!(t.lookup("freezing rain").unwrap().group, Group::Rainy);
    }

    #[test]
    fn daytime_windows() {
        let c = from("daytime.start = 07:00\ndaytime.month.6.end = 21:30\ndaytime.mode = window\n", &[]).unwrap();
        match &c.ingest.daytime {
            DaytimeMode::Window(w) => {
                assert_eq!(w.get(1), (420, 1200));
                assert_eq!(w.get(6), (420, 1290));
            }
            d => panic!("{d:?}"),
        }
        assert!(from("daytime.mode = sometimes\n", &[]).is_err());
        assert!(from("daytime.start = 7\n", &[]).is_err());
    }

    #[test]
    fn archetype_overrides() {
        let c = from("synth.archetypes = 2\nsynth.archetype.1.base_kw = 0.9\n", &[]).unwrap();
        assert_eq!(c.synth.archetypes.len(), 2);
        assert_eq!(c.synth.archetypes[1].base_kw, 0.9);
        assert!(from("synth.archetype.9.base_kw = 1\n", &[]).is_err());
    }

    #[test]
    fn multiple_targets() {
        let c = from("scenario.target = 0.2, 0.5\n", &[]).unwrap();
        assert_eq!(c.scenario.targets, vec![0.2, 0.5]);
    }

    #[test]
    fn malformed_line() {
        assert!(parse_assignments("just words\n", "f").is_err());
        assert!(parse_set("novalue").is_err());
    }

    #[test]
    fn hash_tracks_echo() {
        let a = from("weight.fair = 0.01\n", &[]).unwrap();
        let b = from("weight.fair=0.01", &[]).unwrap();
        let c = from("weight.fair = 0.02\n", &[]).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
