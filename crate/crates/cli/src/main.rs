use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pi3_core::analysis::{
    emit_grid, ingest_profit_csv, montecarlo_tail, write_grid_csv, BoundQuery, OverheadBreakdown, DEFAULT_ETH_USD,
    FIXTURE_PROFITS,
};
use pi3_core::scenario::{ReplicaSummary, ScenarioConfig};
use pi3_core::sim::{run_replicas, run_with_events};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "pi3", version, about = "Permuted chunked execution simulator and analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Simulate a scenario file and print the JSON report.
    Run(RunArgs),
    /// Evaluate the revenue bound and the equilibrium slack.
    Bound(BoundArgs),
    /// Bound (and optionally Monte Carlo) values over an (m, k, lambda) grid as CSV.
    Grid(GridArgs),
    /// Empirical withholding tail at one grid point.
    Montecarlo(McArgs),
    /// Percentile summary of a sandwich profit dataset.
    Casestudy(CaseArgs),
    /// Per-block randomness overhead.
    Overhead(OverheadArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Scenario TOML file.
    config: PathBuf,
    /// Overrides `master_seed` from the file.
    #[arg(long, env = "PI3_SEED")]
    seed: Option<u64>,
    /// Run this many replicas with consecutive seeds and print a summary.
    #[arg(long, default_value_t = 1)]
    replicas: usize,
    /// Write the full JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the base-chain event log (NDJSON).
    #[arg(long)]
    events: Option<PathBuf>,
    /// Write one delivery record per line (NDJSON).
    #[arg(long)]
    deliveries: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Per-block sandwich revenue, ETH.
    #[arg(long)]
    lambda: f64,
    /// Block reward, ETH.
    #[arg(long, default_value_t = 2.0)]
    w: f64,
    /// Probability that a leader seat is held by the coalition.
    #[arg(long, default_value_t = 0.0)]
    q: f64,
    #[arg(long, default_value_t = 10)]
    leaders: usize,
    /// Largest single-block revenue, ETH; defaults to `lambda`.
    #[arg(long = "Lambda")]
    big_lambda: Option<f64>,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [6.37, 109.0])]
    lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
    k: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    m_max: usize,
    #[arg(long, default_value_t = 2.0)]
    w: f64,
    /// Attach a Monte Carlo estimate with this many trials per row.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, env = "PI3_SEED", default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct McArgs {
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 2.0)]
    w: f64,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, env = "PI3_SEED", default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct CaseArgs {
    /// Profit CSV in USD; the bundled fixture by default.
    path: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ETH_USD)]
    eth_usd: f64,
}

#[derive(Args, Debug)]
struct OverheadArgs {
    #[arg(long, default_value_t = 10)]
    leaders: u64,
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut o = io::stdout().lock();
            let res = o.write_all(text.as_bytes()).and_then(|_| {
                if text.ends_with('\n') {
                    Ok(())
                } else {
                    o.write_all(b"\n")
                }
            });
            match res {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn cmd_run(a: RunArgs) -> Result<bool> {
    let mut cfg = ScenarioConfig::load(&a.config).with_context(|| format!("loading {}", a.config.display()))?;
    if let Some(seed) = a.seed {
        cfg.master_seed = seed;
    }
    if a.replicas > 1 {
        let reports = run_replicas(&cfg, a.replicas)?;
        let summary = ReplicaSummary::from_reports(&reports);
        emit(&None, &serde_json::to_string_pretty(&summary)?)?;
        if let Some(p) = &a.out {
            let all: Vec<_> = reports.iter().collect();
            fs::write(p, serde_json::to_string_pretty(&all)?)?;
        }
        return Ok(summary.all_passed);
    }
    let out = run_with_events(&cfg)?;
    if let Some(p) = &a.events {
        fs::write(p, out.event_log())?;
    }
    if let Some(p) = &a.deliveries {
        fs::write(p, out.report.delivery_log())?;
    }
    emit(&a.out, &out.report.to_json())?;
    for f in out.report.failed() {
        eprintln!("assertion failed: {}: {}", f.name, f.detail);
    }
    Ok(out.report.passed)
}

fn cmd_bound(a: BoundArgs) -> Result<bool> {
    let q = BoundQuery {
        m: a.m,
        k: a.k,
        kappa: a.k,
        w: a.w,
        lambda: a.lambda,
        big_lambda: a.big_lambda.unwrap_or(a.lambda),
        q: a.q,
        n_leaders: a.leaders,
    };
    q.validate()?;
    let p = q.p()?;
    let eps = q.epsilon()?;
    emit(&None, &serde_json::to_string_pretty(&json!({ "query": q, "p_k_lambda": p, "epsilon": eps }))?)?;
    Ok(true)
}

fn cmd_grid(a: GridArgs) -> Result<bool> {
    let rows = emit_grid(&a.lambda, &a.k, 1..=a.m_max, a.w, a.trials.map(|t| (t, a.seed)))?;
    let mut buf = Vec::new();
    write_grid_csv(&rows, &mut buf)?;
    emit(&a.out, std::str::from_utf8(&buf)?)?;
    Ok(true)
}

fn cmd_montecarlo(a: McArgs) -> Result<bool> {
    let est = montecarlo_tail(a.m, a.k, a.w, a.lambda, a.trials, a.seed)?;
    let bound = pi3_core::analysis::revenue_tail_bound(a.m, a.k, a.w, a.lambda, a.k)?;
    let within = est.p <= bound + 3.0 * est.se;
    emit(
        &None,
        &serde_json::to_string_pretty(&json!({ "estimate": est, "bound": bound, "within_bound": within }))?,
    )?;
    Ok(true)
}

fn cmd_casestudy(a: CaseArgs) -> Result<bool> {
    let path = a.path.unwrap_or_else(|| PathBuf::from(FIXTURE_PROFITS));
    let data = ingest_profit_csv(&path, a.eth_usd).with_context(|| format!("reading {}", path.display()))?;
    emit(&None, &serde_json::to_string_pretty(&data.summary()?)?)?;
    Ok(true)
}

fn cmd_overhead(a: OverheadArgs) -> Result<bool> {
    emit(&None, &serde_json::to_string_pretty(&OverheadBreakdown::new(a.leaders))?)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Bound(a) => cmd_bound(a),
        Cmd::Grid(a) => cmd_grid(a),
        Cmd::Montecarlo(a) => cmd_montecarlo(a),
        Cmd::Casestudy(a) => cmd_casestudy(a),
        Cmd::Overhead(a) => cmd_overhead(a),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
