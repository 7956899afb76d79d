//! Batch campaigns over compiled protocols: config parsing, parallel trials,
//! and the report files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use cvpv_core::adversaries::{Strategy, StrategyKind, StrategyParams};
use cvpv_core::compilers::{Compiler, CompilerConfig, RunOutput};
use cvpv_core::crcore::{mock_backend, CrProtocol, RcsBackendConfig, RcsProtocol};
use cvpv_core::seed::Seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

pub const SUMMARY_CSV_HEADER: &str = "strategy,trials,accepts,accept_rate,reason_histogram,mean_score,seed";

/// Histogram buckets in check order; every trial lands in exactly one.
pub const OUTCOMES: [&str; 4] = ["Accept", "Timing", "Consistency", "CRTest"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("simulation: {0}")]
    Simulation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Simulation(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

fn default_backend() -> String {
    "rcs".into()
}

fn default_strategies() -> Vec<StrategyKind> {
    vec![StrategyKind::Honest]
}

/// Everything a campaign needs. The master seed determines every trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub compiler: CompilerConfig,
    /// `rcs`, or a mock backend name such as `coin-flip:4`.
    #[serde(default = "default_backend")]
    pub backend: String,
    #[serde(default)]
    pub rcs: RcsBackendConfig,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<StrategyKind>,
    #[serde(default)]
    pub params: StrategyParams,
    #[serde(default)]
    pub trials: usize,
    #[serde(default = "seed_zero")]
    pub seed: Seed,
    /// Worker threads; results do not depend on it.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
}

fn seed_zero() -> Seed {
    Seed::ZERO
}

impl RunConfig {
    /// Reads TOML, or JSON when the file name ends in `.json`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))
        }
    }

    pub fn protocol(&self) -> Result<Arc<dyn CrProtocol>, CliError> {
        let rounds = self.compiler.rounds;
        let p: Arc<dyn CrProtocol> = if self.backend == "rcs" {
            Arc::new(RcsProtocol::new(self.rcs, rounds).map_err(|e| CliError::Config(e.to_string()))?)
        } else {
            Arc::new(mock_backend(&self.backend, rounds).map_err(|e| CliError::Config(e.to_string()))?)
        };
        Ok(p)
    }

    pub fn compiler(&self) -> Result<Compiler, CliError> {
        Compiler::new(self.compiler.clone(), self.protocol()?).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn strategy(&self, kind: StrategyKind) -> Strategy {
        Strategy {
            kind,
            params: self.params.clone(),
        }
    }

    /// Seed of the `idx`-th strategy cell.
    pub fn cell_seed(&self, idx: usize) -> Seed {
        self.seed.derive("campaign/cell", &[idx as u64])
    }
}

pub fn trial_seed(cell: &Seed, t: usize) -> Seed {
    cell.derive("trial", &[t as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub strategy: StrategyKind,
    pub trial: usize,
    pub seed: Seed,
    pub accept: bool,
    pub reason: String,
    pub score: Option<f64>,
    /// SHA-256 over the trial's event log.
    pub log_hash: String,
    pub events: usize,
    pub light_cone_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub strategy: StrategyKind,
    pub trials: usize,
    pub accepts: usize,
    pub accept_rate: f64,
    pub reason_histogram: BTreeMap<String, usize>,
    pub mean_score: Option<f64>,
    pub light_cone_violations: usize,
    pub seed: Seed,
}

impl CellReport {
    pub fn csv_line(&self) -> String {
        let hist: Vec<String> = OUTCOMES
            .iter()
            .map(|k| format!("{k}:{}", self.reason_histogram.get(*k).unwrap_or(&0)))
            .collect();
        format!(
            "{},{},{},{},{},{},{}",
            self.strategy.as_str(),
            self.trials,
            self.accepts,
            self.accept_rate,
            hist.join(";"),
            self.mean_score.map(|s| s.to_string()).unwrap_or_default(),
            self.seed.to_hex()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub cells: Vec<CellReport>,
}

pub struct Campaign {
    pub report: CampaignReport,
    pub trials: Vec<TrialRecord>,
}

fn record(kind: StrategyKind, t: usize, seed: Seed, out: &RunOutput) -> TrialRecord {
    TrialRecord {
        strategy: kind,
        trial: t,
        seed,
        accept: out.verdict.accept,
        reason: if out.verdict.accept { "Accept".into() } else { out.verdict.reason_str().into() },
        score: out.verdict.score(),
        log_hash: out.log.digest(),
        events: out.log.len(),
        light_cone_violations: out.log.light_cone_violations().len(),
    }
}

fn summarize(kind: StrategyKind, seed: Seed, trials: &[TrialRecord]) -> CellReport {
    let accepts = trials.iter().filter(|t| t.accept).count();
    let mut reason_histogram: BTreeMap<String, usize> = OUTCOMES.iter().map(|k| (k.to_string(), 0)).collect();
    for t in trials {
        *reason_histogram.entry(t.reason.clone()).or_default() += 1;
    }
    let scores: Vec<f64> = trials.iter().filter_map(|t| t.score).collect();
    CellReport {
        strategy: kind,
        trials: trials.len(),
        accepts,
        accept_rate: if trials.is_empty() { 0.0 } else { accepts as f64 / trials.len() as f64 },
        reason_histogram,
        mean_score: (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64),
        light_cone_violations: trials.iter().map(|t| t.light_cone_violations).sum(),
        seed,
    }
}

/// Runs every strategy for `cfg.trials` trials. Trial `t` of cell `i` uses
/// `trial_seed(cfg.cell_seed(i), t)`, so the worker count never changes
/// the result.
pub fn run_campaign(cfg: &RunConfig) -> Result<Campaign, CliError> {
    let compiler = cfg.compiler()?;
    let run = || -> Result<Campaign, CliError> {
        let mut cells = Vec::new();
        let mut all = Vec::new();
        for (i, &kind) in cfg.strategies.iter().enumerate() {
            let cell = cfg.cell_seed(i);
            let strategy = cfg.strategy(kind);
            let trials: Vec<TrialRecord> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let seed = trial_seed(&cell, t);
                    compiler
                        .run(&strategy, seed)
                        .map(|out| record(kind, t, seed, &out))
                        .map_err(|e| CliError::Simulation(e.to_string()))
                })
                .collect::<Result<_, _>>()?;
            cells.push(summarize(kind, cell, &trials));
            all.extend(trials);
        }
        Ok(Campaign {
            report: CampaignReport {
                schema_version: SCHEMA_VERSION,
                config: cfg.clone(),
                cells,
            },
            trials: all,
        })
    };
    match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(run),
        None => run(),
    }
}

/// Writes `report.json`, `trials.jsonl` and `summary.csv` into `dir`.
pub fn write_campaign(dir: &Path, c: &Campaign) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let mut report = serde_json::to_string_pretty(&c.report).expect("report serializes");
    report.push('\n');
    fs::write(dir.join("report.json"), report)?;
    let mut jsonl = fs::File::create(dir.join("trials.jsonl"))?;
    for t in &c.trials {
        writeln!(jsonl, "{}", serde_json::to_string(t).expect("trial serializes"))?;
    }
    let mut csv = String::from(SUMMARY_CSV_HEADER);
    csv.push('\n');
    for cell in &c.report.cells {
        csv.push_str(&cell.csv_line());
        csv.push('\n');
    }
    fs::write(dir.join("summary.csv"), csv)?;
    Ok(())
}

/// Re-runs one trial from its recorded seed.
pub fn replay(cfg: &RunConfig, kind: StrategyKind, seed: Seed) -> Result<RunOutput, CliError> {
    cfg.compiler()?
        .run(&cfg.strategy(kind), seed)
        .map_err(|e| CliError::Simulation(e.to_string()))
}
