use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AdversaryError, Strategy, StrategyKind, StrategyParams};
use crate::compilers::{Compiler, CompilerConfig, CompilerError, Mode, RejectReason};
use crate::crcore::{RcsBackendConfig, RcsProtocol};
use crate::seed::Seed;
use crate::spacetime::{rat, serde_rational, Rational};

pub const SWEEP_CSV_HEADER: &str = "strategy,mode,delta,trials,accepts,accept_rate,reason_histogram,mean_score,seed";

const REASONS: [RejectReason; 3] = [RejectReason::Timing, RejectReason::Consistency, RejectReason::CRTest];

/// Strategies x compiler modes x backend `delta` values, all on the RCS backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepGrid {
    pub strategies: Vec<StrategyKind>,
    pub modes: Vec<Mode>,
    pub deltas: Vec<f64>,
    pub trials: usize,
    /// Rounds for every mode except `single`.
    pub rounds: usize,
    #[serde(with = "serde_rational")]
    pub delta_t: Rational,
    pub blocks: usize,
    pub alpha: f64,
    pub backend: RcsBackendConfig,
    pub params: StrategyParams,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            strategies: vec![StrategyKind::Honest, StrategyKind::PrecommitAnswer],
            modes: vec![Mode::Single, Mode::Sequential],
            deltas: vec![0.25, 0.5, 1.0],
            trials: 20,
            rounds: 3,
            delta_t: rat(1, 4),
            blocks: 2,
            alpha: 0.5,
            backend: RcsBackendConfig {
                n_qubits: 4,
                depth: 8,
                k: 20,
                ..RcsBackendConfig::default()
            },
            params: StrategyParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub strategy: StrategyKind,
    pub mode: Mode,
    pub delta: f64,
    pub trials: usize,
    pub accepts: usize,
    pub accept_rate: f64,
    pub reason_histogram: BTreeMap<String, usize>,
    pub mean_score: Option<f64>,
    pub seed: Seed,
}

impl SweepRow {
    pub fn to_csv_line(&self) -> String {
        let hist: Vec<String> = REASONS
            .iter()
            .map(|r| format!("{}:{}", r.as_str(), self.reason_histogram.get(r.as_str()).unwrap_or(&0)))
            .collect();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.strategy.as_str(),
            self.mode.as_str(),
            self.delta,
            self.trials,
            self.accepts,
            self.accept_rate,
            hist.join(";"),
            self.mean_score.map(|s| s.to_string()).unwrap_or_default(),
            self.seed.to_hex()
        )
    }
}

impl SweepGrid {
    /// Cells in row order: strategy, then mode, then delta.
    pub fn cells(&self) -> Vec<(StrategyKind, Mode, f64)> {
        let mut v = Vec::new();
        for &s in &self.strategies {
            for &m in &self.modes {
                for &d in &self.deltas {
                    v.push((s, m, d));
                }
            }
        }
        v
    }

    fn compiler_config(&self, mode: Mode) -> CompilerConfig {
        match mode {
            Mode::Single => CompilerConfig::single(),
            Mode::Sequential => CompilerConfig::sequential(self.rounds),
            Mode::RapidFire => CompilerConfig::rapid_fire(self.rounds, self.delta_t),
            Mode::SeqRapidFire => CompilerConfig::seq_rapid_fire(self.rounds, self.delta_t, self.blocks, self.alpha),
        }
    }

    fn compiler(&self, mode: Mode, delta: f64) -> Result<Compiler, AdversaryError> {
        let cfg = self.compiler_config(mode);
        let backend = RcsBackendConfig { delta, ..self.backend };
        let protocol = RcsProtocol::new(backend, cfg.rounds).map_err(CompilerError::Backend)?;
        Ok(Compiler::new(cfg, Arc::new(protocol))?)
    }

    /// Runs one cell from its row seed; trial `t` uses `seed.derive("trial", [t])`.
    pub fn run_cell(&self, strategy: StrategyKind, mode: Mode, delta: f64, seed: Seed) -> Result<SweepRow, AdversaryError> {
        let compiler = self.compiler(mode, delta)?;
        let strat = Strategy {
            kind: strategy,
            params: self.params.clone(),
        };
        let verdicts = (0..self.trials)
            .map(|t| compiler.run(&strat, seed.derive("trial", &[t as u64])).map(|o| o.verdict))
            .collect::<Result<Vec<_>, _>>()?;
        let accepts = verdicts.iter().filter(|v| v.accept).count();
        let mut reason_histogram: BTreeMap<String, usize> = REASONS.iter().map(|r| (r.as_str().to_string(), 0)).collect();
        for r in verdicts.iter().filter_map(|v| v.reason) {
            *reason_histogram.entry(r.as_str().to_string()).or_default() += 1;
        }
        let scores: Vec<f64> = verdicts.iter().filter_map(|v| v.score()).collect();
        let mean_score = (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64);
        Ok(SweepRow {
            strategy,
            mode,
            delta,
            trials: self.trials,
            accepts,
            accept_rate: accepts as f64 / self.trials.max(1) as f64,
            reason_histogram,
            mean_score,
            seed,
        })
    }
}

/// One row per grid cell; cell `i` runs from `master.derive("sweep/cell", [i])`.
pub fn sweep(grid: &SweepGrid, master: &Seed) -> Result<Vec<SweepRow>, AdversaryError> {
    grid.cells()
        .into_par_iter()
        .enumerate()
        .map(|(i, (s, m, d))| grid.run_cell(s, m, d, master.derive("sweep/cell", &[i as u64])))
        .collect()
}

/// Reruns a recorded row from its own seed.
pub fn replay_cell(grid: &SweepGrid, row: &SweepRow) -> Result<SweepRow, AdversaryError> {
    grid.run_cell(row.strategy, row.mode, row.delta, row.seed)
}
