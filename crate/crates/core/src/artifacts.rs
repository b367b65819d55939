//! Run artifacts: samples and histogram tables (CSV), cell summaries (JSON),
//! and pdf plots (SVG), each with a matching reader.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{LatencySample, RunSummary};
use crate::metrics::{Histogram, LatencyCounts, LatencyStats, ScenarioSummary, REQUIREMENTS_MS};
use crate::traffic::ClassTable;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed artifact: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRow {
    pub seed: u64,
    pub message_id: u64,
    pub class: String,
    pub receiver_id: u32,
    pub generation_ms: u64,
    pub reception_ms: u64,
    pub latency_ms: u64,
}

/// Streams sample rows of several runs into one table.
pub struct SamplesWriter {
    inner: csv::Writer<BufWriter<File>>,
}

impl SamplesWriter {
    pub fn create(path: &Path) -> Result<Self, ArtifactError> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(File::create(path)?));
        inner.write_record(["seed", "message_id", "class", "receiver_id", "generation_ms", "reception_ms", "latency_ms"])?;
        Ok(Self { inner })
    }

    pub fn write_run(&mut self, seed: u64, samples: &[LatencySample], classes: &ClassTable) -> Result<(), ArtifactError> {
        for s in samples {
            self.inner.serialize(SampleRow {
                seed,
                message_id: s.message.0,
                class: classes.get(s.class).name.clone(),
                receiver_id: s.receiver,
                generation_ms: s.generation_ms,
                reception_ms: s.reception_ms,
                latency_ms: s.latency_ms(),
            })?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), ArtifactError> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn read_samples(path: &Path) -> Result<Vec<SampleRow>, ArtifactError> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let rows = r.deserialize().collect::<Result<Vec<SampleRow>, _>>()?;
    for row in &rows {
        if row.reception_ms.checked_sub(row.generation_ms) != Some(row.latency_ms) {
            return Err(ArtifactError::Malformed(format!("message {} latency mismatch", row.message_id)));
        }
    }
    Ok(rows)
}

/// Latency counts of rows generated at or after `warmup_ms`.
pub fn counts_from_rows(rows: &[SampleRow], warmup_ms: u64) -> LatencyCounts {
    let mut c = LatencyCounts::default();
    for r in rows.iter().filter(|r| r.generation_ms >= warmup_ms) {
        c.add(r.latency_ms);
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct HistogramRow {
    bin_start_ms: f64,
    bin_end_ms: f64,
    count: u64,
    density: f64,
}

pub fn write_histogram(path: &Path, h: &Histogram) -> Result<(), ArtifactError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for (i, (&count, &density)) in h.counts.iter().zip(&h.density).enumerate() {
        let end = if i + 1 == h.counts.len() { h.max_ms } else { h.bin_start(i + 1) };
        w.serialize(HistogramRow { bin_start_ms: h.bin_start(i), bin_end_ms: end, count, density })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_histogram(path: &Path) -> Result<Histogram, ArtifactError> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let rows = r.deserialize().collect::<Result<Vec<HistogramRow>, _>>()?;
    let first = rows.first().ok_or_else(|| ArtifactError::Malformed("histogram has no bins".into()))?;
    let bin_ms = first.bin_end_ms - first.bin_start_ms;
    let max_ms = rows.last().map_or(0.0, |r| r.bin_end_ms);
    Ok(Histogram {
        bin_ms,
        max_ms,
        total: rows.iter().map(|r| r.count).sum(),
        counts: rows.iter().map(|r| r.count).collect(),
        density: rows.iter().map(|r| r.density).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub stats: LatencyStats,
    pub run: RunSummary,
}

/// Everything `summary.json` holds for one (RSU count, lambda) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub summary: ScenarioSummary,
    pub warmup_ms: u64,
    pub bin_ms: f64,
    pub per_seed: Vec<SeedRecord>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ArtifactError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ArtifactError> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

const PLOT_W: f64 = 640.0;
const PLOT_H: f64 = 360.0;
const MARGIN: f64 = 48.0;
/// The x axis always reaches past the 100 ms requirement.
const MIN_X_DOMAIN_MS: f64 = 150.0;

/// Latency pdf as an SVG step plot with the 20 ms (black) and 100 ms (red)
/// requirement lines. Lines carry a `data-ms` attribute with their position.
pub fn render_svg(h: &Histogram, title: &str) -> String {
    let last_used = h.counts.iter().rposition(|&c| c > 0).map_or(0.0, |i| h.bin_start(i + 1));
    let x_max = last_used.max(MIN_X_DOMAIN_MS);
    let y_max = h.density.iter().copied().fold(0.0, f64::max).max(1e-9);
    let sx = |ms: f64| MARGIN + ms / x_max * (PLOT_W - 2.0 * MARGIN);
    let sy = |d: f64| PLOT_H - MARGIN - d / y_max * (PLOT_H - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_W}" height="{PLOT_H}" viewBox="0 0 {PLOT_W} {PLOT_H}" data-x-max-ms="{x_max}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#, PLOT_W / 2.0, escape(title));
    let (x0, y0) = (sx(0.0), sy(0.0));
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.2},{:.2} V{y0:.2} H{:.2}" stroke="black" fill="none"/>"#,
        MARGIN,
        PLOT_W - MARGIN
    );
    let mut d = format!("M{x0:.2},{y0:.2}");
    for (i, &den) in h.density.iter().enumerate() {
        let start = h.bin_start(i);
        if start >= x_max {
            break;
        }
        let end = (start + h.bin_ms).min(x_max);
        let _ = write!(d, " V{:.2} H{:.2}", sy(den), sx(end));
    }
    let _ = write!(d, " V{y0:.2}");
    let _ = writeln!(svg, r#"<path class="pdf" d="{d}" stroke="steelblue" fill="none"/>"#);
    for (ms, color) in REQUIREMENTS_MS.iter().zip(["black", "red"]) {
        let x = sx(*ms as f64);
        let _ = writeln!(
            svg,
            r#"<line class="requirement" data-ms="{ms}" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{y0:.2}" stroke="{color}" stroke-dasharray="4 3"/>"#,
            MARGIN
        );
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">latency (ms)</text>"#, PLOT_W / 2.0, PLOT_H - 12.0);
    for tick in (0..=x_max as u64).step_by(50) {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{tick}</text>"#, sx(tick as f64), y0 + 14.0);
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Requirement line positions (ms) and the x-domain end parsed back from a
/// plot produced by [`render_svg`].
pub fn read_svg_requirements(svg: &str) -> Result<(Vec<u64>, f64), ArtifactError> {
    let attr = |tag: &str, name: &str| -> Option<String> {
        let key = format!("{name}=\"");
        let start = tag.find(&key)? + key.len();
        let len = tag[start..].find('"')?;
        Some(tag[start..start + len].to_string())
    };
    let root = svg.lines().next().unwrap_or_default();
    let x_max = attr(root, "data-x-max-ms")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| ArtifactError::Malformed("svg has no x domain".into()))?;
    let lines = svg
        .lines()
        .filter(|l| l.contains(r#"class="requirement""#))
        .map(|l| attr(l, "data-ms").and_then(|v| v.parse().ok()))
        .collect::<Option<Vec<u64>>>()
        .ok_or_else(|| ArtifactError::Malformed("requirement line without data-ms".into()))?;
    Ok((lines, x_max))
}
