//! Stage orchestration shared by the command-line front end and the tests.

use std::path::Path;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{self, IngestReport};
use crate::metrics::{validate, validation_cohort, ValidationReport};
use crate::model::{Channel, Dataset, IntervalSeries};
use crate::reconstruction::{reconstruct_all, ReconstructionResult};
use crate::scenario::{aggregate_profiles, annual_totals, build_scenario, FeederAggregate, Scenario};
use crate::similarity::{select_all, similarity_matrix, NeighborSet, SimilarityMatrix};
use crate::weather::{daily_avg_weight, interval_weights, WeightSeries};

/// Runs `f` on a dedicated pool of `workers` threads (the global pool if `None`).
pub fn with_workers<T, F>(workers: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::Config("--workers must be ≥ 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn load(cfg: &RunConfig) -> Result<(Dataset, IngestReport)> {
    let (m, w) = cfg.require_inputs()?;
    io::ingest(m, w, &cfg.ingest)
}

pub struct SimilarityOutput {
    pub weights: WeightSeries,
    pub matrix: SimilarityMatrix,
    pub neighbors: Vec<NeighborSet>,
}

pub fn run_similarity(dataset: &Dataset, cfg: &RunConfig) -> Result<SimilarityOutput> {
    let table = cfg.weather_table()?;
    let weights = interval_weights(&dataset.weather, &dataset.calendar, &table)?;
    let daily = daily_avg_weight(&weights, &dataset.calendar)?;
    let matrix = similarity_matrix(dataset, &daily, &cfg.gap)?;
    let neighbors = select_all(&matrix, &cfg.selection)?;
    Ok(SimilarityOutput {
        weights,
        matrix,
        neighbors,
    })
}

/// Neighbour sets from the configured file, else `out_dir/neighbors.csv` if
/// present, else computed in-run.
pub fn neighbors_for(dataset: &Dataset, cfg: &RunConfig) -> Result<Vec<NeighborSet>> {
    let default = cfg.out_dir.join("neighbors.csv");
    match cfg.neighbors.as_deref() {
        Some(p) => io::read_neighbors_csv(p),
        None if default.exists() => io::read_neighbors_csv(&default),
        None => Ok(run_similarity(dataset, cfg)?.neighbors),
    }
}

pub fn run_reconstruct(dataset: &Dataset, neighbors: &[NeighborSet]) -> Result<Vec<ReconstructionResult>> {
    reconstruct_all(dataset, neighbors)
}

/// Reconstructions from the configured file, else `out_dir/reconstruction.csv`
/// if present, else computed in-run.
pub fn reconstructions_for(dataset: &Dataset, cfg: &RunConfig) -> Result<Vec<ReconstructionResult>> {
    let default = cfg.out_dir.join("reconstruction.csv");
    match cfg.reconstruction.as_deref() {
        Some(p) => io::read_reconstruction_csv(p, dataset),
        None if default.exists() => io::read_reconstruction_csv(&default, dataset),
        None => run_reconstruct(dataset, &neighbors_for(dataset, cfg)?),
    }
}

pub fn scenario_name(cfg: &RunConfig, target: f64) -> String {
    match &cfg.scenario.name {
        Some(n) if cfg.scenario.targets.len() == 1 => n.clone(),
        Some(n) => format!("{n}_{target}"),
        None => format!("pen{target}"),
    }
}

pub fn run_scenarios(
    dataset: &Dataset,
    recons: &[ReconstructionResult],
    cfg: &RunConfig,
) -> Result<Vec<(Scenario, FeederAggregate)>> {
    let pool = annual_totals(dataset, recons)?;
    cfg.scenario
        .targets
        .iter()
        .map(|&target| {
            let s = build_scenario(
                &scenario_name(cfg, target),
                &pool,
                target,
                cfg.scenario.tolerance,
                cfg.scenario.seed,
                &cfg.scenario.options,
            )?;
            let agg = aggregate_profiles(&s.members, dataset, recons)?;
            Ok((s, agg))
        })
        .collect()
}

/// Attaches ground truth from a `timestamp,customer_id,total_generation_kwh`
/// file to reconstructions that have none.
pub fn attach_truth(recons: &mut [ReconstructionResult], dataset: &Dataset, path: &Path) -> Result<usize> {
    let truth = io::read_truth_csv(path, &dataset.calendar)?;
    let mut attached = 0;
    for r in recons.iter_mut().filter(|r| r.actual.is_none()) {
        if let Some((_, g)) = truth.iter().find(|(id, _)| *id == r.solar_customer_id) {
            r.actual = Some(IntervalSeries::complete(
                r.solar_customer_id.clone(),
                Channel::TotalGeneration,
                g.clone(),
            ));
            attached += 1;
        }
    }
    Ok(attached)
}

/// Reads `customer_id,capacity_kw` and returns capacities aligned to `ids`.
pub fn read_capacities(path: &Path, ids: &[String]) -> Result<Vec<f64>> {
    let table = io::read_table(path)?;
    let (ci, kc) = match (table.column("customer_id"), table.column("capacity_kw")) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::Parse {
                file: path.display().to_string(),
                line: 1,
                detail: "expected columns customer_id,capacity_kw".into(),
            })
        }
    };
    ids.iter()
        .map(|id| {
            let row = table
                .rows
                .iter()
                .find(|r| r.get(ci).map(String::as_str) == Some(id.as_str()))
                .ok_or_else(|| Error::DataQuality(format!("no capacity for {id}")))?;
            row.get(kc)
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|v| v.is_finite() && *v > 0.0)
                .ok_or_else(|| Error::DataQuality(format!("bad capacity for {id}")))
        })
        .collect()
}

pub fn run_metrics(recons: &[ReconstructionResult], dataset: &Dataset, cfg: &RunConfig) -> Result<ValidationReport> {
    let cohort = validation_cohort(recons)?;
    let capacity = match &cfg.capacity {
        Some(p) => {
            let ids: Vec<String> = cohort.iter().map(|c| c.customer_id.clone()).collect();
            Some(read_capacities(p, &ids)?)
        }
        None => None,
    };
    validate(&cohort, &dataset.calendar, capacity.as_deref())
}
