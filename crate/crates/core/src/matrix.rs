//! Experiment matrix: RSU counts x densities x seeds, run in parallel, with
//! per-cell artifacts and one cross-cell trend report.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::artifacts::{render_svg, write_histogram, write_json, ArtifactError, CellReport, SamplesWriter, SeedRecord};
use crate::engine::Simulation;
use crate::metrics::{summarize, trend_report, LatencyCounts, ScenarioSummary, TrendReport};
use crate::scenario::{Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("empty {0} set")]
    EmptySet(&'static str),
    #[error("cell rsus={rsus} lambda={lambda} seed={seed}: {source}")]
    Cell {
        rsus: usize,
        lambda: u32,
        seed: u64,
        #[source]
        source: ScenarioError,
    },
    #[error("cell rsus={rsus} lambda={lambda}: {source}")]
    Artifact {
        rsus: usize,
        lambda: u32,
        #[source]
        source: ArtifactError,
    },
    #[error("metrics: {0}")]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSpec {
    pub rsus: Vec<usize>,
    pub lambdas: Vec<u32>,
    pub seeds: Vec<u64>,
    pub bin_ms: f64,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub report: CellReport,
    pub counts: LatencyCounts,
}

impl CellResult {
    pub fn summary(&self) -> &ScenarioSummary {
        &self.report.summary
    }
}

#[derive(Debug, Clone)]
pub struct MatrixResult {
    /// Ordered by (rsus, lambda).
    pub cells: Vec<CellResult>,
    pub trend: TrendReport,
}

pub fn cell_dir(out: &Path, rsus: usize, lambda: u32) -> PathBuf {
    out.join(format!("rsu{rsus}_lambda{lambda}"))
}

/// Runs every seed of one cell in order. With `out`, writes the cell's
/// samples table, histogram, summary, and plot.
pub fn run_cell(base: &Scenario, rsus: usize, lambda: u32, seeds: &[u64], bin_ms: f64, out: Option<&Path>) -> Result<CellResult, MatrixError> {
    let artifact = |source| MatrixError::Artifact { rsus, lambda, source };
    let dir = out.map(|o| cell_dir(o, rsus, lambda));
    let mut writer = match &dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            Some(SamplesWriter::create(&d.join("samples.csv")).map_err(artifact)?)
        }
        None => None,
    };
    let mut counts = LatencyCounts::default();
    let mut runs = Vec::with_capacity(seeds.len());
    let mut per_seed = Vec::with_capacity(seeds.len());
    let warmup_ms = base.engine.warmup_ms;
    for &seed in seeds {
        let scenario = base.for_cell(rsus, lambda, seed);
        let sim = Simulation::new(&scenario).map_err(|source| MatrixError::Cell { rsus, lambda, seed, source })?;
        let classes = sim.classes().clone();
        let output = sim.finish();
        let mut seed_counts = LatencyCounts::default();
        for s in output.samples.iter().filter(|s| s.generation_ms >= warmup_ms) {
            seed_counts.add(s.latency_ms());
        }
        if let Some(w) = writer.as_mut() {
            w.write_run(seed, &output.samples, &classes).map_err(artifact)?;
        }
        counts.merge(&seed_counts);
        per_seed.push(SeedRecord { seed, stats: seed_counts.stats(), run: output.summary.clone() });
        runs.push(output.summary);
    }
    let summary = summarize(rsus, lambda, seeds, &counts, &runs);
    let report = CellReport { summary, warmup_ms, bin_ms, per_seed };
    if let (Some(d), Some(w)) = (&dir, writer) {
        w.finish().map_err(artifact)?;
        let hist = counts.histogram(bin_ms, base.scheduler.expiry_ms as f64)?;
        write_histogram(&d.join("histogram.csv"), &hist).map_err(artifact)?;
        write_json(&d.join("summary.json"), &report).map_err(artifact)?;
        let title = format!("{rsus} RSU(s), {lambda} vehicles/lane");
        fs::write(d.join("pdf.svg"), render_svg(&hist, &title))?;
    }
    Ok(CellResult { report, counts })
}

/// Runs the full matrix in parallel across cells. Output is independent of
/// thread scheduling: each cell writes only its own directory and the trend
/// report is written once at the end.
pub fn run_matrix(base: &Scenario, spec: &MatrixSpec, out: Option<&Path>) -> Result<MatrixResult, MatrixError> {
    for (name, empty) in [("rsus", spec.rsus.is_empty()), ("lambdas", spec.lambdas.is_empty()), ("seeds", spec.seeds.is_empty())] {
        if empty {
            return Err(MatrixError::EmptySet(name));
        }
    }
    base.validate().map_err(|source| MatrixError::Cell { rsus: 0, lambda: 0, seed: base.seed, source })?;
    let mut keys: Vec<(usize, u32)> = spec.rsus.iter().flat_map(|&r| spec.lambdas.iter().map(move |&l| (r, l))).collect();
    keys.sort_unstable();
    keys.dedup();
    if let Some(o) = out {
        fs::create_dir_all(o)?;
    }
    let cells = keys
        .par_iter()
        .map(|&(r, l)| run_cell(base, r, l, &spec.seeds, spec.bin_ms, out))
        .collect::<Result<Vec<_>, _>>()?;
    let summaries: Vec<ScenarioSummary> = cells.iter().map(|c| c.report.summary.clone()).collect();
    let trend = trend_report(&summaries);
    if let Some(o) = out {
        write_json(&o.join("trend.json"), &trend).map_err(|source| MatrixError::Artifact { rsus: 0, lambda: 0, source })?;
    }
    Ok(MatrixResult { cells, trend })
}
