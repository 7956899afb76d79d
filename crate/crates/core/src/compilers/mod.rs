//! Compilers from a certified-randomness backend to position verification.
//!
//! Two verifiers `V_0` and `V_1` fire one-time-padded shares so they meet at
//! the claimed position: `V_0` sends `(x_i, s_i)` with
//! `s_i = G_k(x_i xor y_i) xor ch_i` and `V_1` sends `y_i`. Each verifier
//! expects the answer back exactly one light-travel time later. The four
//! modes differ only in when rounds fire: once (single), one round trip
//! apart (sequential), `Δ` apart (rapid-fire), or as `m` back-to-back
//! rapid-fire blocks (seq-rapid-fire). All four share one runner.

mod adapter;
mod config;
mod prover;
mod verdict;
pub mod wire;

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;
use std::sync::Arc;

use serde::Serialize;

pub use adapter::{cvpv_to_cr, CvpvAsCr};
pub use config::{CompilerConfig, Geometry, Mode, RoundSlot, Schedule};
pub use prover::{
    Colluder, Deployment, HonestProver, HonestStrategy, ProverCore, ProverEnv, ProverStrategy, RoundShares,
    ShareBook,
};
pub use verdict::{
    verdict_checks, BlockRecord, Diagnostics, ReceivedAnswer, RejectReason, RoundRecord, TimingCheck, Transcript,
    Verdict,
};

use crate::bits::BitString;
use crate::crcore::{Answer, CrError, CrProtocol};
use crate::oracle::{Oracle, OracleError, OracleKey, OracleParams, QueryRecord};
use crate::seed::Seed;
use crate::spacetime::{
    Context, Event, EventLog, Party, PartyId, Position, SendPolicy, Simulator, SpacetimeError, TimeStamp,
};

pub const VERIFIER_0: PartyId = 0;
pub const VERIFIER_1: PartyId = 1;
pub const FIRST_PROVER_ID: PartyId = 2;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum CompilerError {
    #[error("invalid compiler config: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Backend(#[from] CrError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
}

/// Per-trial secrets fixed before any challenge exists, all derived from
/// the trial seed.
#[derive(Debug, Clone)]
pub struct Setup {
    pub oracle_seed: Seed,
    pub key: OracleKey,
    /// Backend randomness `r` for each block.
    pub block_seeds: Vec<Seed>,
    pub x: Vec<Vec<BitString>>,
    pub y: Vec<Vec<BitString>>,
    pub prover_seed: Seed,
}

impl Setup {
    pub fn colluder_seed(&self, j: u64) -> Seed {
        self.prover_seed.derive("colluder", &[j])
    }
}

/// A validated configuration bound to a backend.
#[derive(Debug, Clone)]
pub struct Compiler {
    cfg: CompilerConfig,
    protocol: Arc<dyn CrProtocol>,
    schedule: Schedule,
}

/// Everything one trial produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub verdict: Verdict,
    pub transcript: Transcript,
    pub log: EventLog,
    pub queries: Vec<QueryRecord>,
    /// Causality or policy errors raised by prover handlers.
    pub violations: Vec<SpacetimeError>,
    pub colluders: Vec<(PartyId, Position)>,
    pub horizon: TimeStamp,
}

#[derive(Serialize)]
struct ReportView<'a> {
    verdict: bool,
    reason: &'static str,
    rounds: Vec<&'a RoundRecord>,
    timings: &'a [TimingCheck],
}

impl RunOutput {
    /// `{verdict, reason, rounds, timings}` as a JSON value.
    pub fn report(&self) -> serde_json::Value {
        serde_json::to_value(ReportView {
            verdict: self.verdict.accept,
            reason: self.verdict.reason_str(),
            rounds: self.transcript.rounds().collect(),
            timings: &self.verdict.diagnostics.timing,
        })
        .expect("report serializes")
    }
}

impl Compiler {
    pub fn new(cfg: CompilerConfig, protocol: Arc<dyn CrProtocol>) -> Result<Self, CompilerError> {
        cfg.validate()?;
        if protocol.rounds() != cfg.rounds {
            return Err(CompilerError::ConfigInvalid(format!(
                "backend has {} rounds, config has {}",
                protocol.rounds(),
                cfg.rounds
            )));
        }
        if cfg.mode.is_rapid() && protocol.adaptive() {
            return Err(CompilerError::ConfigInvalid(
                "rapid-fire modes fire every challenge before any answer returns; adaptive backends are not allowed"
                    .into(),
            ));
        }
        if protocol.challenge_bits() == 0 {
            return Err(CompilerError::ConfigInvalid("backend challenges are empty".into()));
        }
        let schedule = cfg.schedule();
        Ok(Compiler { cfg, protocol, schedule })
    }

    pub fn config(&self) -> &CompilerConfig {
        &self.cfg
    }

    pub fn protocol(&self) -> &Arc<dyn CrProtocol> {
        &self.protocol
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn oracle_params(&self) -> OracleParams {
        OracleParams {
            input_bits: self.cfg.oracle_input_bits,
            output_bits: self.protocol.challenge_bits(),
            key_bits: self.cfg.oracle_key_bits,
        }
    }

    pub fn setup(&self, trial: &Seed) -> Setup {
        let m = self.cfg.oracle_input_bits;
        let share = |label: &str, b: usize, i: usize| {
            let bytes = trial.derive(label, &[b as u64, i as u64]).expand("share", m.div_ceil(8));
            BitString::from_bytes(m, &bytes)
        };
        let blocks = self.schedule.blocks;
        let rounds = self.cfg.rounds;
        Setup {
            oracle_seed: trial.derive("setup/oracle", &[]),
            key: OracleKey::derive(&trial.derive("setup/key", &[]), self.cfg.oracle_key_bits),
            block_seeds: (0..blocks).map(|b| trial.derive("setup/r", &[b as u64])).collect(),
            x: (0..blocks).map(|b| (1..=rounds).map(|i| share("setup/x", b, i)).collect()).collect(),
            y: (0..blocks).map(|b| (1..=rounds).map(|i| share("setup/y", b, i)).collect()).collect(),
            prover_seed: trial.derive("prover", &[]),
        }
    }

    pub fn oracle(&self, setup: &Setup) -> Result<Oracle, CompilerError> {
        Ok(Oracle::new(self.oracle_params(), setup.oracle_seed, setup.key.clone())?)
    }

    pub fn run(&self, strategy: &dyn ProverStrategy, trial: Seed) -> Result<RunOutput, CompilerError> {
        self.run_with_policy(strategy, trial, None)
    }

    /// Runs one trial; `policy`, if given, vets every message.
    pub fn run_with_policy(
        &self,
        strategy: &dyn ProverStrategy,
        trial: Seed,
        policy: Option<Box<dyn SendPolicy>>,
    ) -> Result<RunOutput, CompilerError> {
        let setup = self.setup(&trial);
        let oracle = Rc::new(self.oracle(&setup)?);
        let env = ProverEnv {
            protocol: self.protocol.clone(),
            public: setup.block_seeds.iter().map(|r| self.protocol.publish(r)).collect(),
            oracle: oracle.clone(),
            schedule: self.schedule.clone(),
            tau: self.cfg.tau,
            verifiers: [VERIFIER_0, VERIFIER_1],
            first_id: FIRST_PROVER_ID,
            seed: setup.prover_seed,
        };
        let deployment = strategy.spawn(&env)?;
        let shared = Rc::new(RefCell::new(VerifierBook::default()));
        let setup = Rc::new(setup);

        let mut sim = Simulator::new();
        if let Some(p) = policy {
            sim.set_policy(p);
        }
        for j in 0..2 {
            sim.add_party(
                j as PartyId,
                self.schedule.geometry.verifiers[j],
                Box::new(Verifier {
                    index: j,
                    target: deployment.interceptors[j],
                    schedule: self.schedule.clone(),
                    setup: setup.clone(),
                    oracle: oracle.clone(),
                    protocol: self.protocol.clone(),
                    book: shared.clone(),
                }),
            )?;
        }
        let mut colluders = Vec::new();
        for c in deployment.colluders {
            oracle.register(c.id);
            colluders.push((c.id, c.position));
            sim.add_party(c.id, c.position, c.party)?;
        }
        for id in deployment.interceptors {
            if sim.position(id).is_none() {
                return Err(SpacetimeError::UnknownParty(id).into());
            }
        }
        let horizon = self
            .schedule
            .last_expected()
            .plus(self.cfg.tau + self.schedule.geometry.round_trip());
        sim.run_until(horizon);
        let violations = sim.violations().to_vec();
        let log = sim.into_log();

        let book = shared.borrow();
        if let Some(e) = &book.error {
            return Err(e.clone());
        }
        let transcript = self.transcript(&setup, &book);
        let verdict = verdict_checks(&transcript, &self.cfg, self.protocol.as_ref());
        Ok(RunOutput {
            verdict,
            transcript,
            log,
            queries: oracle.records(),
            violations,
            colluders,
            horizon,
        })
    }

    fn transcript(&self, setup: &Setup, book: &VerifierBook) -> Transcript {
        let blocks = (0..self.schedule.blocks)
            .map(|b| BlockRecord {
                r: setup.block_seeds[b],
                rounds: (1..=self.schedule.rounds)
                    .map(|i| {
                        let slot = self.schedule.slot(b, i).expect("slot in range");
                        let sent = book.sent.get(&(b, i));
                        RoundRecord {
                            block: b,
                            round: i,
                            ch: sent.map(|s| s.ch.to_hex()).unwrap_or_default(),
                            x: setup.x[b][i - 1].to_hex(),
                            s: sent.map(|s| s.s.to_hex()).unwrap_or_default(),
                            y: setup.y[b][i - 1].to_hex(),
                            sent: slot.send,
                            expected: slot.expected,
                            answers: [0, 1].map(|j| book.received.get(&(j, b, i)).cloned()),
                        }
                    })
                    .collect(),
            })
            .collect();
        Transcript {
            challenge_bits: self.protocol.challenge_bits(),
            key: hex::encode(&setup.key.0),
            blocks,
        }
    }
}

struct SentChallenge {
    ch: BitString,
    s: BitString,
}

#[derive(Default)]
struct VerifierBook {
    sent: BTreeMap<(usize, usize), SentChallenge>,
    received: BTreeMap<(usize, usize, usize), ReceivedAnswer>,
    error: Option<CompilerError>,
}

struct Verifier {
    index: usize,
    target: PartyId,
    schedule: Schedule,
    setup: Rc<Setup>,
    oracle: Rc<Oracle>,
    protocol: Arc<dyn CrProtocol>,
    book: Rc<RefCell<VerifierBook>>,
}

impl Verifier {
    fn fire(&self, ctx: &mut Context<'_>, slot: &RoundSlot) -> Result<(), CompilerError> {
        let (b, i) = (slot.block, slot.round);
        let x = &self.setup.x[b][i - 1];
        let y = &self.setup.y[b][i - 1];
        let body = if self.index == 0 {
            let prior: Vec<Answer> = {
                let book = self.book.borrow();
                (1..i)
                    .map(|p| book.received.get(&(0, b, p)).map(|a| a.ans.clone()).unwrap_or_default())
                    .collect()
            };
            let ch = self.protocol.gen(i, &prior, &self.setup.block_seeds[b])?;
            let z = x.xor(y).expect("shares share a length");
            let s = self.oracle.otp_encode(ctx.me(), &z, &ch, ctx.now())?;
            let body = wire::encode_first(x, &s);
            self.book.borrow_mut().sent.insert((b, i), SentChallenge { ch, s });
            body
        } else {
            y.as_bytes().to_vec()
        };
        let kind = if self.index == 0 { wire::SHARE0 } else { wire::SHARE1 };
        ctx.send(self.target, kind, wire::frame(b, i, &body))?;
        Ok(())
    }
}

impl Party for Verifier {
    fn on_start(&mut self, ctx: &mut Context<'_>) {
        for slot in &self.schedule.slots {
            let _ = ctx.wake_at(slot.send[self.index]);
        }
    }

    fn on_activate(&mut self, ctx: &mut Context<'_>, inbox: &[Event]) {
        let now = ctx.now().expect("activations carry a time");
        {
            let mut book = self.book.borrow_mut();
            for ev in inbox.iter().filter(|e| e.msg.kind == wire::ANSWER) {
                if let Some((b, i, body)) = wire::unframe(&ev.msg.payload) {
                    book.received.entry((self.index, b, i)).or_insert(ReceivedAnswer {
                        t: now,
                        ans: body.to_vec(),
                    });
                }
            }
        }
        let due: Vec<RoundSlot> = self
            .schedule
            .slots
            .iter()
            .filter(|s| s.send[self.index] == now)
            .cloned()
            .collect();
        for slot in due {
            let key = (slot.block, slot.round);
            if self.index == 0 && self.book.borrow().sent.contains_key(&key) {
                continue;
            }
            if let Err(e) = self.fire(ctx, &slot) {
                self.book.borrow_mut().error.get_or_insert(e);
            }
        }
    }
}

fn check_mode(cfg: &CompilerConfig, mode: Mode) -> Result<(), CompilerError> {
    if cfg.mode != mode {
        return Err(CompilerError::ConfigInvalid(format!(
            "expected mode {}, config says {}",
            mode.as_str(),
            cfg.mode.as_str()
        )));
    }
    Ok(())
}

pub fn run_single_round(
    cfg: &CompilerConfig,
    protocol: Arc<dyn CrProtocol>,
    strategy: &dyn ProverStrategy,
    trial: Seed,
) -> Result<RunOutput, CompilerError> {
    check_mode(cfg, Mode::Single)?;
    Compiler::new(cfg.clone(), protocol)?.run(strategy, trial)
}

pub fn run_sequential(
    cfg: &CompilerConfig,
    protocol: Arc<dyn CrProtocol>,
    strategy: &dyn ProverStrategy,
    trial: Seed,
) -> Result<RunOutput, CompilerError> {
    check_mode(cfg, Mode::Sequential)?;
    Compiler::new(cfg.clone(), protocol)?.run(strategy, trial)
}

pub fn run_rapid_fire(
    cfg: &CompilerConfig,
    protocol: Arc<dyn CrProtocol>,
    strategy: &dyn ProverStrategy,
    trial: Seed,
) -> Result<RunOutput, CompilerError> {
    check_mode(cfg, Mode::RapidFire)?;
    Compiler::new(cfg.clone(), protocol)?.run(strategy, trial)
}

pub fn run_seq_rapid_fire(
    cfg: &CompilerConfig,
    protocol: Arc<dyn CrProtocol>,
    strategy: &dyn ProverStrategy,
    trial: Seed,
) -> Result<RunOutput, CompilerError> {
    check_mode(cfg, Mode::SeqRapidFire)?;
    Compiler::new(cfg.clone(), protocol)?.run(strategy, trial)
}
