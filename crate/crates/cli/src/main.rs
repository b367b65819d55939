//! `nrv2x`: run scenarios, the RSU x density matrix, validate scenario
//! files, or host a drive session.
//!
//! Exit codes: 0 success, 1 validation error, 2 run failure, 3 trend
//! assertion failure.

use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nrv2x::drive::bridge::{bridge_serve, BridgeConfig};
use nrv2x::matrix::{run_cell, run_matrix, MatrixSpec};
use nrv2x::metrics::{LatencyStats, DEFAULT_BIN_MS};
use nrv2x::{parse_scenario, Scenario};

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUN: u8 = 2;
const EXIT_TRENDS: u8 = 3;

#[derive(Parser)]
#[command(name = "nrv2x", version, about = "NR-V2X Mode 1 sidelink latency simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one (RSU count, density) cell over one or more seeds.
    Simulate(SimulateArgs),
    /// Run every combination of RSU counts, densities and seeds.
    Matrix(MatrixArgs),
    /// Parse and validate a scenario file, then print it normalized.
    Validate {
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Host the do-not-pass drive scenario for one driver at a time.
    Serve(ServeArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON); defaults apply when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Seeds: comma list of values and ranges, e.g. `1,4,10..20,30..=32`.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<Seeds>,
    #[arg(long)]
    duration_ms: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BIN_MS)]
    bin_ms: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    rsus: Option<usize>,
    #[arg(long)]
    lambda: Option<u32>,
}

#[derive(Args)]
struct MatrixArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3])]
    rsus: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [5u32, 10, 20])]
    lambda: Vec<u32>,
    /// Exit with status 3 unless the density, RSU, and tail trends all hold.
    #[arg(long)]
    assert_trends: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 7878)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Seed of the first episode; each restart adds one.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stop after this many sessions.
    #[arg(long)]
    sessions: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |x: &str| x.trim().parse::<u64>().map_err(|e| format!("bad seed `{x}`: {e}"));
        if let Some((a, b)) = part.split_once("..=") {
            out.extend(num(a)?..=num(b)?);
        } else if let Some((a, b)) = part.split_once("..") {
            out.extend(num(a)?..num(b)?);
        } else {
            out.push(num(part)?);
        }
    }
    if out.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(Seeds(out))
}

enum Failure {
    Validation(String),
    Run(String),
    Trends(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Run(_) => EXIT_RUN,
            Failure::Trends(_) => EXIT_TRENDS,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Run(m) | Failure::Trends(m) => m,
        }
    }
}

fn load_scenario(path: Option<&Path>) -> Result<Scenario, Failure> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Failure::Validation(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    parse_scenario(&text).map_err(|e| Failure::Validation(e.to_string()))
}

fn base_scenario(common: &Common) -> Result<Scenario, Failure> {
    let mut s = load_scenario(common.scenario.as_deref())?;
    if let Some(d) = common.duration_ms {
        s.engine.duration_ms = d;
    }
    if !(common.bin_ms > 0.0) {
        return Err(Failure::Validation(format!("--bin-ms must be > 0, got {}", common.bin_ms)));
    }
    s.validate().map_err(|e| Failure::Validation(e.to_string()))?;
    Ok(s)
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".into(), |x| x.to_string())
}

fn print_stats(label: &str, s: &LatencyStats) {
    println!(
        "{label}: samples={} mean={} p50={} p95={} p99={} P(>20ms)={} P(>100ms)={}",
        s.samples,
        fmt_opt(s.mean_ms.map(|m| format!("{m:.3}"))),
        fmt_opt(s.p50_ms),
        fmt_opt(s.p95_ms),
        fmt_opt(s.p99_ms),
        fmt_opt(s.p_over_20.map(|p| format!("{p:.5}"))),
        fmt_opt(s.p_over_100.map(|p| format!("{p:.5}"))),
    );
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let base = base_scenario(&args.common)?;
    let rsus = args.rsus.unwrap_or(base.active_rsus().len());
    let lambda = args.lambda.unwrap_or(base.density.lambda);
    if rsus == 0 || rsus > base.rsus.len() {
        return Err(Failure::Validation(format!("--rsus must be in 1..={}", base.rsus.len())));
    }
    let seeds = args.common.seeds.clone().map_or_else(|| vec![base.seed], |s| s.0);
    let cell = run_cell(&base, rsus, lambda, &seeds, args.common.bin_ms, args.common.out.as_deref())
        .map_err(|e| Failure::Run(e.to_string()))?;
    for s in &cell.report.per_seed {
        print_stats(&format!("seed {}", s.seed), &s.stats);
    }
    print_stats(&format!("rsus={rsus} lambda={lambda}"), &cell.summary().stats);
    Ok(())
}

fn matrix(args: MatrixArgs) -> Result<(), Failure> {
    let base = base_scenario(&args.common)?;
    if let Some(bad) = args.rsus.iter().find(|&&r| r == 0 || r > base.rsus.len()) {
        return Err(Failure::Validation(format!("RSU count {bad} not in 1..={}", base.rsus.len())));
    }
    let spec = MatrixSpec {
        rsus: args.rsus,
        lambdas: args.lambda,
        seeds: args.common.seeds.clone().map_or_else(|| (0..10).collect(), |s| s.0),
        bin_ms: args.common.bin_ms,
    };
    let result = run_matrix(&base, &spec, args.common.out.as_deref()).map_err(|e| Failure::Run(e.to_string()))?;
    for c in &result.cells {
        let s = c.summary();
        print_stats(&format!("rsus={} lambda={}", s.rsus, s.lambda), &s.stats);
    }
    let t = &result.trend;
    println!(
        "trends: complete={} density={} rsu={} tail={}",
        t.complete,
        fmt_opt(t.row_monotone),
        fmt_opt(t.column_monotone),
        fmt_opt(t.tail_at_one_rsu_dense)
    );
    if args.assert_trends && !t.all_hold() {
        return Err(Failure::Trends(format!("trend assertion failed: {t:?}")));
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Result<(), Failure> {
    let listener = TcpListener::bind((args.host.as_str(), args.port)).map_err(|e| Failure::Run(format!("bind: {e}")))?;
    log::info!("listening on {}", listener.local_addr().map_err(|e| Failure::Run(e.to_string()))?);
    let cfg = BridgeConfig { seed: args.seed, ..BridgeConfig::default() };
    let mut served = 0;
    while args.sessions.is_none_or(|n| served < n) {
        let log = bridge_serve(&listener, &cfg).map_err(|e| Failure::Run(e.to_string()))?;
        println!("{}", session_line(&log));
        served += 1;
    }
    Ok(())
}

fn session_line(log: &nrv2x::drive::bridge::SessionLog) -> String {
    format!(
        "session: ticks={} episodes={} rejected={} dropped={} failsafe_ticks={} max_tick_interval_ms={:.2}",
        log.ticks,
        log.episodes.len(),
        log.rejected_frames,
        log.dropped_snapshots,
        log.failsafe_ticks,
        log.max_tick_interval_ms
    )
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Matrix(a) => matrix(a),
        Command::Validate { scenario } => load_scenario(scenario.as_deref()).map(|s| println!("{}", nrv2x::scenario::to_json(&s))),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
