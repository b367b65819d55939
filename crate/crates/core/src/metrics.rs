//! Latency pdfs, PDB exceedance, and cross-cell trend verdicts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{LatencySample, RunSummary};

pub const DEFAULT_BIN_MS: f64 = 1.0;
/// Latency requirements drawn on plots and reported in summaries.
pub const REQUIREMENTS_MS: [u64; 2] = [20, 100];

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("bin width must be > 0, got {0}")]
    BadBinWidth(f64),
    #[error("histogram range must be > 0, got {0}")]
    BadRange(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_ms: f64,
    pub max_ms: f64,
    pub counts: Vec<u64>,
    pub total: u64,
    /// `counts / (total * bin_ms)`; all zero when empty.
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn bin_start(&self, i: usize) -> f64 {
        i as f64 * self.bin_ms
    }

    /// Mass of bins lying entirely above `threshold`.
    pub fn tail_mass(&self, threshold: f64) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let above: u64 = self
            .counts
            .iter()
            .enumerate()
            .filter(|(i, _)| self.bin_start(*i) > threshold)
            .map(|(_, c)| c)
            .sum();
        above as f64 / self.total as f64
    }
}

/// Counts over `[0, max_ms]`; the last bin also takes values at or past the
/// upper boundary.
pub fn build_histogram(values: &[f64], bin_ms: f64, max_ms: f64) -> Result<Histogram, MetricsError> {
    if !(bin_ms > 0.0) || !bin_ms.is_finite() {
        return Err(MetricsError::BadBinWidth(bin_ms));
    }
    if !(max_ms > 0.0) || !max_ms.is_finite() {
        return Err(MetricsError::BadRange(max_ms));
    }
    let bins = ((max_ms / bin_ms).ceil() as usize).max(1);
    let mut counts = vec![0u64; bins];
    for &v in values {
        let i = ((v.max(0.0) / bin_ms).floor() as usize).min(bins - 1);
        counts[i] += 1;
    }
    let total = values.len() as u64;
    let density = counts
        .iter()
        .map(|&c| if total == 0 { 0.0 } else { c as f64 / (total as f64 * bin_ms) })
        .collect();
    Ok(Histogram { bin_ms, max_ms, counts, total, density })
}

/// Fraction of samples strictly above `threshold_ms`; `None` for no samples.
pub fn exceedance(latencies: &[u64], threshold_ms: u64) -> Option<f64> {
    if latencies.is_empty() {
        return None;
    }
    let above = latencies.iter().filter(|&&l| l > threshold_ms).count();
    Some(above as f64 / latencies.len() as f64)
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[u64], q: f64) -> Option<u64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((q / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Drops samples generated during warm-up and returns latencies in sample order.
pub fn steady_latencies(samples: &[LatencySample], warmup_ms: u64) -> Vec<u64> {
    samples.iter().filter(|s| s.generation_ms >= warmup_ms).map(|s| s.latency_ms()).collect()
}

/// Statistics computed from latencies alone, so they can be regenerated from
/// a samples table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub samples: u64,
    pub mean_ms: Option<f64>,
    pub p50_ms: Option<u64>,
    pub p95_ms: Option<u64>,
    pub p99_ms: Option<u64>,
    pub max_ms: Option<u64>,
    pub p_over_20: Option<f64>,
    pub p_over_100: Option<f64>,
}

pub fn latency_stats(latencies: &[u64]) -> LatencyStats {
    LatencyCounts::from_latencies(latencies).stats()
}

/// Exact latency multiset as per-millisecond counts; mergeable across seeds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LatencyCounts {
    counts: BTreeMap<u64, u64>,
    total: u64,
}

impl LatencyCounts {
    pub fn from_latencies(latencies: &[u64]) -> Self {
        let mut c = Self::default();
        for &l in latencies {
            c.add(l);
        }
        c
    }

    pub fn add(&mut self, latency_ms: u64) {
        *self.counts.entry(latency_ms).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        for (&l, &n) in &other.counts {
            *self.counts.entry(l).or_insert(0) += n;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    fn nearest_rank(&self, q: f64) -> Option<u64> {
        if self.total == 0 {
            return None;
        }
        let rank = (((q / 100.0) * self.total as f64).ceil() as u64).clamp(1, self.total);
        let mut seen = 0;
        for (&l, &n) in &self.counts {
            seen += n;
            if seen >= rank {
                return Some(l);
            }
        }
        unreachable!("rank within total")
    }

    fn exceedance(&self, threshold_ms: u64) -> Option<f64> {
        if self.total == 0 {
            return None;
        }
        let above: u64 = self.counts.range(threshold_ms + 1..).map(|(_, n)| n).sum();
        Some(above as f64 / self.total as f64)
    }

    pub fn stats(&self) -> LatencyStats {
        // Integer sum keeps the mean independent of sample order.
        let sum: u128 = self.counts.iter().map(|(&l, &n)| u128::from(l) * u128::from(n)).sum();
        LatencyStats {
            samples: self.total,
            mean_ms: (self.total > 0).then(|| sum as f64 / self.total as f64),
            p50_ms: self.nearest_rank(50.0),
            p95_ms: self.nearest_rank(95.0),
            p99_ms: self.nearest_rank(99.0),
            max_ms: self.counts.keys().next_back().copied(),
            p_over_20: self.exceedance(20),
            p_over_100: self.exceedance(100),
        }
    }

    /// Histogram of the counted latencies.
    pub fn histogram(&self, bin_ms: f64, max_ms: f64) -> Result<Histogram, MetricsError> {
        let mut h = build_histogram(&[], bin_ms, max_ms)?;
        let bins = h.counts.len();
        for (&l, &n) in &self.counts {
            let i = ((l as f64 / bin_ms).floor() as usize).min(bins - 1);
            h.counts[i] += n;
        }
        h.total = self.total;
        h.density = h
            .counts
            .iter()
            .map(|&c| if h.total == 0 { 0.0 } else { c as f64 / (h.total as f64 * bin_ms) })
            .collect();
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub rsus: usize,
    pub lambda: u32,
    pub seeds: Vec<u64>,
    pub stats: LatencyStats,
    /// RSU messages reaching at least one vehicle over those generated.
    pub delivery_ratio: Option<f64>,
    /// Mean channel busy ratio across channels and seeds.
    pub cbr: f64,
    pub generated: u64,
    pub delivered: u64,
    pub expired: u64,
    pub failed: u64,
}

pub fn summarize(rsus: usize, lambda: u32, seeds: &[u64], latencies: &LatencyCounts, runs: &[RunSummary]) -> ScenarioSummary {
    let generated: u64 = runs.iter().map(|r| r.generated).sum();
    let delivered: u64 = runs.iter().map(|r| r.delivered).sum();
    let cbrs: Vec<f64> = runs.iter().flat_map(|r| r.cbr.iter().copied()).collect();
    ScenarioSummary {
        rsus,
        lambda,
        seeds: seeds.to_vec(),
        stats: latencies.stats(),
        delivery_ratio: (generated > 0).then(|| delivered as f64 / generated as f64),
        cbr: if cbrs.is_empty() { 0.0 } else { cbrs.iter().sum::<f64>() / cbrs.len() as f64 },
        generated,
        delivered,
        expired: runs.iter().map(|r| r.expired()).sum(),
        failed: runs.iter().map(|r| r.failed).sum(),
    }
}

pub const MATRIX_RSUS: [usize; 3] = [1, 2, 3];
pub const MATRIX_LAMBDAS: [u32; 3] = [5, 10, 20];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub complete: bool,
    /// Required (rsus, lambda) cells with no summary.
    pub missing: Vec<(usize, u32)>,
    /// Cells supplied more than once.
    pub duplicates: Vec<(usize, u32)>,
    /// Mean latency non-decreasing in lambda for every RSU count.
    pub row_monotone: Option<bool>,
    /// P(X > 100 ms) non-increasing in RSU count for every lambda.
    pub column_monotone: Option<bool>,
    /// P(X > 100 ms) > 0 at 1 RSU, lambda 20.
    pub tail_at_one_rsu_dense: Option<bool>,
}

impl TrendReport {
    pub fn all_hold(&self) -> bool {
        self.complete
            && self.row_monotone == Some(true)
            && self.column_monotone == Some(true)
            && self.tail_at_one_rsu_dense == Some(true)
    }
}

fn non_decreasing(xs: &[Option<f64>]) -> Option<bool> {
    let xs: Option<Vec<f64>> = xs.iter().copied().collect();
    xs.map(|v| v.windows(2).all(|w| w[0] <= w[1]))
}

pub fn trend_report(cells: &[ScenarioSummary]) -> TrendReport {
    let mut by_cell: BTreeMap<(usize, u32), &ScenarioSummary> = BTreeMap::new();
    let mut duplicates = Vec::new();
    for c in cells {
        if by_cell.insert((c.rsus, c.lambda), c).is_some() {
            duplicates.push((c.rsus, c.lambda));
        }
    }
    duplicates.sort_unstable();
    duplicates.dedup();
    let missing: Vec<(usize, u32)> = MATRIX_RSUS
        .iter()
        .flat_map(|&r| MATRIX_LAMBDAS.iter().map(move |&l| (r, l)))
        .filter(|k| !by_cell.contains_key(k))
        .collect();
    let complete = missing.is_empty() && duplicates.is_empty();
    if !complete {
        return TrendReport {
            complete,
            missing,
            duplicates,
            row_monotone: None,
            column_monotone: None,
            tail_at_one_rsu_dense: None,
        };
    }
    let cell = |r: usize, l: u32| by_cell[&(r, l)];
    let rows: Option<Vec<bool>> = MATRIX_RSUS
        .iter()
        .map(|&r| non_decreasing(&MATRIX_LAMBDAS.map(|l| cell(r, l).stats.mean_ms)))
        .collect();
    let cols: Option<Vec<bool>> = MATRIX_LAMBDAS
        .iter()
        .map(|&l| non_decreasing(&MATRIX_RSUS.map(|r| cell(r, l).stats.p_over_100.map(|p| -p))))
        .collect();
    TrendReport {
        complete,
        missing,
        duplicates,
        row_monotone: rows.map(|v| v.iter().all(|&b| b)),
        column_monotone: cols.map(|v| v.iter().all(|&b| b)),
        tail_at_one_rsu_dense: cell(1, 20).stats.p_over_100.map(|p| p > 0.0),
    }
}
