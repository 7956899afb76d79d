use std::fs;
use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use cvpv_cli::{replay, run_campaign, write_campaign, CliError, RunConfig};
use cvpv_core::adversaries::{sweep, StrategyKind, SweepGrid, SWEEP_CSV_HEADER};
use cvpv_core::entropy::{
    eat_bound, g_correction, minentropy_from_smooth, success_bounds, xhog_entropy, EatParams,
};
use cvpv_core::seed::Seed;
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "cvpv", version, about = "Position-verification simulation campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign described by a config file.
    Run(RunArgs),
    /// Evaluate the entropy and success-probability bounds.
    Bounds(BoundsArgs),
    /// Sweep strategies x modes x delta on the RCS backend.
    Sweep(SweepArgs),
    /// Re-run one trial from its seed and dump its event log.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct Common {
    /// Master seed as hex (overrides the config).
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    /// Grid file (TOML); the built-in grid when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ReplayArgs {
    /// Trial seed as recorded in trials.jsonl.
    seed: String,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "honest")]
    strategy: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Rounds for the accumulated bound.
    #[arg(long, requires = "h")]
    n: Option<u64>,
    /// Per-round entropy rate.
    #[arg(long, requires = "n")]
    h: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    c1: f64,
    #[arg(long, default_value_t = 0.0)]
    c0: f64,
    /// Smoothing parameter.
    #[arg(long)]
    eps: Option<f64>,
    /// Smooth min-entropy to convert (uses --eps, default 0).
    #[arg(long)]
    h_smooth: Option<f64>,
    #[arg(long, requires = "h_min")]
    p_test: Option<f64>,
    #[arg(long, requires = "p_test")]
    h_min: Option<f64>,
    #[arg(long, requires_all = ["alpha", "m"])]
    p_block: Option<f64>,
    #[arg(long, requires_all = ["p_block", "m"])]
    alpha: Option<f64>,
    #[arg(long, requires_all = ["p_block", "alpha"])]
    m: Option<u64>,
    /// Qubits for the XHOG entropy bound.
    #[arg(long, requires_all = ["xhog_delta", "eta"])]
    xhog_n: Option<u64>,
    #[arg(long, requires_all = ["xhog_n", "eta"])]
    xhog_delta: Option<f64>,
    #[arg(long, requires_all = ["xhog_n", "xhog_delta"])]
    eta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    c_log: f64,
}

fn parse_seed(s: &str) -> Result<Seed, CliError> {
    Seed::from_hex(s).map_err(|e| CliError::Config(format!("seed: {e}")))
}

fn out_dir(flag: Option<PathBuf>, cfg: Option<PathBuf>) -> PathBuf {
    flag.or(cfg).unwrap_or_else(|| PathBuf::from("out"))
}

fn cmd_run(a: RunArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(&a.config)?;
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = &a.common.seed {
        cfg.seed = parse_seed(s)?;
    }
    if a.common.workers.is_some() {
        cfg.workers = a.common.workers;
    }
    let dir = out_dir(a.common.out, cfg.out.clone());
    let start = Instant::now();
    let campaign = run_campaign(&cfg)?;
    write_campaign(&dir, &campaign)?;
    for cell in &campaign.report.cells {
        println!("{}", cell.csv_line());
    }
    eprintln!("{} trials in {:.2?}, written to {}", campaign.trials.len(), start.elapsed(), dir.display());
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<(), CliError> {
    let mut grid = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            toml::from_str::<SweepGrid>(&text).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => SweepGrid::default(),
    };
    if let Some(t) = a.trials {
        grid.trials = t;
    }
    let seed = a.common.seed.as_deref().map(parse_seed).transpose()?.unwrap_or(Seed::ZERO);
    let go = || sweep(&grid, &seed).map_err(|e| CliError::Simulation(e.to_string()));
    let rows = match a.common.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(go)?,
        None => go()?,
    };
    let mut csv = format!("{SWEEP_CSV_HEADER}\n");
    for r in &rows {
        csv.push_str(&r.to_csv_line());
        csv.push('\n');
    }
    print!("{csv}");
    if let Some(dir) = a.common.out {
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("sweep.csv"), &csv)?;
        let json = serde_json::to_string_pretty(&json!({ "grid": grid, "rows": rows })).expect("rows serialize");
        fs::write(dir.join("sweep.json"), json + "\n")?;
    }
    Ok(())
}

fn cmd_replay(a: ReplayArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&a.config)?;
    let kind: StrategyKind = a.strategy.parse().map_err(|e: cvpv_core::adversaries::AdversaryError| CliError::Config(e.to_string()))?;
    let out = replay(&cfg, kind, parse_seed(&a.seed)?)?;
    let summary = json!({
        "log_hash": out.log.digest(),
        "report": out.report(),
    });
    if let Some(dir) = a.out {
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("events.jsonl"), out.log.to_jsonl())?;
        fs::write(dir.join("replay.json"), serde_json::to_string_pretty(&summary).expect("json") + "\n")?;
    }
    println!("{}", serde_json::to_string(&summary).expect("json"));
    Ok(())
}

fn insert(m: &mut Map<String, Value>, k: &str, v: impl serde::Serialize) {
    m.insert(k.into(), serde_json::to_value(v).expect("value serializes"));
}

fn cmd_bounds(a: BoundsArgs) -> Result<(), CliError> {
    let bad = |e: cvpv_core::entropy::EntropyError| CliError::Config(e.to_string());
    let mut m = Map::new();
    if let (Some(n), Some(h)) = (a.n, a.h) {
        if n == 0 {
            return Err(CliError::Config("--n must be at least 1".into()));
        }
        let p = EatParams { n, h, c1: a.c1, c0: a.c0, eps: a.eps.unwrap_or(0.5) };
        insert(&mut m, "eat_bound", eat_bound(&p));
    }
    if let Some(eps) = a.eps {
        insert(&mut m, "g_correction", g_correction(eps).map_err(bad)?);
    }
    if let Some(hs) = a.h_smooth {
        insert(&mut m, "min_entropy", minentropy_from_smooth(hs, a.eps.unwrap_or(0.0)).map_err(bad)?);
    }
    let single = match (a.p_test, a.h_min) {
        (Some(p), Some(h)) => Some(success_bounds(p, h, 0.0, 1.0, 1).map_err(bad)?.single),
        _ => None,
    };
    if let Some(s) = single {
        insert(&mut m, "single", s);
    }
    if let (Some(p), Some(alpha), Some(blocks)) = (a.p_block, a.alpha, a.m) {
        let s = success_bounds(1.0, 0.0, p, alpha, blocks).map_err(bad)?;
        insert(&mut m, "repeated", s.repeated);
        insert(&mut m, "repeated_raw", s.repeated_raw);
        insert(&mut m, "repeated_exponent", s.exponent);
    }
    if let (Some(n), Some(d), Some(eta)) = (a.xhog_n, a.xhog_delta, a.eta) {
        insert(&mut m, "xhog_entropy", xhog_entropy(n, d, eta, a.c_log).map_err(bad)?);
    }
    if m.is_empty() {
        return Err(CliError::Config(
            "nothing to evaluate; give --n/--h, --eps, --h-smooth, --p-test/--h-min, --p-block/--alpha/--m or --xhog-n/--xhog-delta/--eta".into(),
        ));
    }
    println!("{}", serde_json::to_string_pretty(&Value::Object(m)).expect("json"));
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Replay(a) => cmd_replay(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match panic::catch_unwind(|| dispatch(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(3),
    }
}
