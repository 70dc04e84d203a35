//! Command-line front end. Each subcommand reads its inputs from files,
//! writes its outputs into `out_dir`, and reports failures as a single
//! `ERROR <code>: <detail>` line on stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{parse_set, RunConfig};
use crate::error::{Error, Result};
use crate::io::{self, IngestReport};
use crate::model::Dataset;
use crate::pipeline;
use crate::synth;

#[derive(Debug, Parser)]
#[command(name = "btmsolar", version, about = "Behind-the-meter solar reconstruction and scenario synthesis")]
pub struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub sets: Vec<String>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory (same as `--set out_dir=DIR`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Add a generation time to manifests (makes them non-reproducible).
    #[arg(long, global = true)]
    pub stamp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with ground truth.
    Synth {
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Similarity matrix and neighbour sets.
    Similarity,
    /// Reconstruct total generation for every solar customer.
    Reconstruct,
    /// Build feeder scenarios at target penetration.
    Scenario {
        /// Target penetration(s), e.g. `--target 0.2 --target 0.5`.
        #[arg(long)]
        target: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Validate reconstructions against metered or synthetic truth.
    Metrics,
    /// Render SVG charts from the metric and scenario CSVs in the output dir.
    Plot,
}

/// Parses `args` (including the program name) and runs; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => {
                    eprintln!("ERROR E_CONFIG: invalid command line");
                    crate::error::ErrorCode::Config.exit_status()
                }
            };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.code();
            let detail = e.to_string().replace('\n', " ");
            eprintln!("ERROR {}: {}", code.as_str(), detail);
            code.exit_status()
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut sets: Vec<(String, String)> = Vec::new();
    if let Some(out) = &cli.out {
        sets.push(("out_dir".into(), out.display().to_string()));
    }
    for s in &cli.sets {
        sets.push(parse_set(s)?);
    }
    match &cli.command {
        Command::Synth { seed: Some(s) } => sets.push(("synth.seed".into(), s.to_string())),
        Command::Scenario { target, seed } => {
            if !target.is_empty() {
                let list: Vec<String> = target.iter().map(|t| t.to_string()).collect();
                sets.push(("scenario.target".into(), list.join(",")));
            }
            if let Some(s) = seed {
                sets.push(("scenario.seed".into(), s.to_string()));
            }
        }
        _ => {}
    }
    RunConfig::load(cli.config.as_deref(), &sets)
}

pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    let stamp = cli.stamp;
    pipeline::with_workers(cli.workers, || match &cli.command {
        Command::Synth { .. } => cmd_synth(&cfg, stamp),
        Command::Similarity => cmd_similarity(&cfg, stamp),
        Command::Reconstruct => cmd_reconstruct(&cfg, stamp),
        Command::Scenario { .. } => cmd_scenario(&cfg, stamp),
        Command::Metrics => cmd_metrics(&cfg, stamp),
        Command::Plot => cmd_plot(&cfg),
    })?
}

fn manifest(cfg: &RunConfig, stamp: bool, body: &str) -> String {
    let mut s = cfg.manifest_header();
    if stamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        s.push_str(&format!("generated_unix: {secs}\n"));
    }
    s.push_str(body);
    s
}

fn write_text(path: PathBuf, body: &str) -> Result<()> {
    std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
}

fn ensure_out(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))
}

fn say(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

fn coverage(ds: &Dataset, rep: &IngestReport) -> String {
    format!(
        "customers: {}\nsolar: {}\nnonsolar: {}\nspo: {}\nintervals: {}\ndays: {}\nunmatched_rows: {}\ngap_intervals: {}\nsign_clamps: {}\ndaylight_flags: {}\n",
        rep.customers,
        rep.solar,
        rep.customers - rep.solar,
        rep.spo,
        rep.n_intervals,
        ds.calendar.n_days(),
        rep.unmatched_rows,
        rep.gap_intervals,
        rep.sign_clamps,
        rep.used_daylight_flags
    )
}

fn cmd_synth(cfg: &RunConfig, stamp: bool) -> Result<()> {
    let (ds, truth) = synth::generate(&cfg.synth)?;
    let extra = manifest(cfg, stamp, "");
    let paths = synth::emit_dataset(&ds, &truth, &cfg.out_dir, &extra)?;
    say(&format!(
        "synth: {} customers ({} solar) × {} intervals -> {}",
        ds.customers.len(),
        truth.solar.len(),
        ds.calendar.n_intervals(),
        paths.meters.parent().unwrap_or(&cfg.out_dir).display()
    ));
    Ok(())
}

fn cmd_similarity(cfg: &RunConfig, stamp: bool) -> Result<()> {
    let (ds, rep) = pipeline::load(cfg)?;
    let out = pipeline::run_similarity(&ds, cfg)?;
    ensure_out(cfg)?;
    io::write_matrix_csv(&out.matrix, &cfg.out_dir.join("similarity_matrix.csv"))?;
    io::write_neighbors_csv(&out.neighbors, &cfg.out_dir.join("neighbors.csv"))?;
    let fallback = out.neighbors.iter().filter(|n| n.fallback_used).count();
    let body = format!(
        "{}unknown_condition_intervals: {}\nneighbor_sets: {}\nfallback_used: {}\n",
        coverage(&ds, &rep),
        out.weights.unknown_conditions,
        out.neighbors.len(),
        fallback
    );
    write_text(cfg.out_dir.join("similarity_manifest.txt"), &manifest(cfg, stamp, &body))?;
    say(&format!(
        "similarity: {} solar × {} non-solar; {} neighbour sets ({} via fallback)",
        out.matrix.n_solar(),
        out.matrix.n_nonsolar(),
        out.neighbors.len(),
        fallback
    ));
    Ok(())
}

fn cmd_reconstruct(cfg: &RunConfig, stamp: bool) -> Result<()> {
    let (ds, rep) = pipeline::load(cfg)?;
    ensure_out(cfg)?;
    let path = cfg.out_dir.join("reconstruction.csv");
    if ds.solar().next().is_none() {
        io::write_reconstruction_csv(&ds.calendar, &[], &path)?;
        eprintln!("warning: no solar customers in the meter data; wrote an empty reconstruction");
        return Ok(());
    }
    let neighbors = pipeline::neighbors_for(&ds, cfg)?;
    let recons = pipeline::run_reconstruct(&ds, &neighbors)?;
    io::write_reconstruction_csv(&ds.calendar, &recons, &path)?;
    let recovered: f64 = recons.iter().map(|r| r.recovered()).sum();
    let withheld: usize = recons.iter().map(|r| r.withheld).sum();
    let night: usize = recons.iter().map(|r| r.night_corrections).sum();
    let body = format!(
        "{}solar_reconstructed: {}\nrecovered_kwh: {recovered}\nwithheld_intervals: {withheld}\nnight_corrections: {night}\n",
        coverage(&ds, &rep),
        recons.len()
    );
    write_text(cfg.out_dir.join("reconstruct_manifest.txt"), &manifest(cfg, stamp, &body))?;
    say(&format!(
        "reconstruct: {} solar customers; recovered energy Σw = {recovered:.3} kWh; withheld intervals {withheld}; night corrections {night}",
        recons.len()
    ));
    Ok(())
}

fn cmd_scenario(cfg: &RunConfig, stamp: bool) -> Result<()> {
    let (ds, _) = pipeline::load(cfg)?;
    let recons = pipeline::reconstructions_for(&ds, cfg)?;
    let results = pipeline::run_scenarios(&ds, &recons, cfg)?;
    ensure_out(cfg)?;
    let scenarios: Vec<_> = results.iter().map(|(s, _)| s.clone()).collect();
    let rollups: Vec<(&str, &_)> = results.iter().map(|(s, a)| (s.name.as_str(), a)).collect();
    io::write_scenario_manifest(&scenarios, &cfg.out_dir.join("scenario_manifest.csv"))?;
    io::write_monthly_csv(&rollups, &cfg.out_dir.join("scenario_monthly.csv"))?;
    io::write_feeder_csv(&ds.calendar, &rollups, &cfg.out_dir.join("scenario_feeder.csv"))?;
    let mut body = String::new();
    for s in &scenarios {
        let line = format!(
            "scenario {}: target {} achieved {} tolerance {} members {} seed {} feasible {}",
            s.name,
            s.target_penetration,
            s.achieved_penetration,
            s.tolerance,
            s.member_count(),
            s.seed,
            s.feasible
        );
        say(&line);
        body.push_str(&line);
        body.push('\n');
    }
    write_text(cfg.out_dir.join("scenario_summary.txt"), &manifest(cfg, stamp, &body))?;
    let bad: Vec<String> = scenarios
        .iter()
        .filter(|s| !s.feasible)
        .map(|s| format!("{} (target {}, best {})", s.name, s.target_penetration, s.achieved_penetration))
        .collect();
    if !bad.is_empty() {
        return Err(Error::Infeasible(bad.join("; ")));
    }
    Ok(())
}

fn cmd_metrics(cfg: &RunConfig, stamp: bool) -> Result<()> {
    let (ds, _) = pipeline::load(cfg)?;
    let mut recons = pipeline::reconstructions_for(&ds, cfg)?;
    if let Some(t) = &cfg.truth {
        pipeline::attach_truth(&mut recons, &ds, t)?;
    }
    let report = pipeline::run_metrics(&recons, &ds, cfg)?;
    io::write_report(&report, &cfg.out_dir)?;
    let usable = format!("usable_customers: {}\n", report.customers.join(" "));
    let summary = manifest(cfg, stamp, &format!("{}{}", report.summary(), usable));
    write_text(cfg.out_dir.join("metrics_manifest.txt"), &summary)?;
    say(report.summary().trim_end());
    say(usable.trim_end());
    Ok(())
}

fn cmd_plot(cfg: &RunConfig) -> Result<()> {
    for p in crate::plot::plot_dir(&cfg.out_dir)? {
        say(&format!("wrote {}", p.display()));
    }
    Ok(())
}
