use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use rand_chacha::ChaCha20Rng;

use super::config::Schedule;
use super::wire;
use super::CompilerError;
use crate::bits::BitString;
use crate::crcore::{Answer, CrProtocol};
use crate::oracle::Oracle;
use crate::seed::Seed;
use crate::spacetime::{Context, Event, Party, PartyId, Position, Rational, TimeStamp};

/// Everything a prover strategy may know before the first challenge exists.
pub struct ProverEnv {
    pub protocol: Arc<dyn CrProtocol>,
    /// Public parameters of each block's backend instance.
    pub public: Vec<Vec<u8>>,
    pub oracle: Rc<Oracle>,
    pub schedule: Schedule,
    pub tau: Rational,
    pub verifiers: [PartyId; 2],
    /// Smallest id free for colluders.
    pub first_id: PartyId,
    /// Root of the provers' private randomness.
    pub seed: Seed,
}

impl ProverEnv {
    pub fn colluder_seed(&self, j: u64) -> Seed {
        self.seed.derive("colluder", &[j])
    }

    pub fn input_bits(&self) -> usize {
        self.oracle.params().input_bits
    }

    pub fn output_bits(&self) -> usize {
        self.oracle.params().output_bits
    }
}

pub struct Colluder {
    pub id: PartyId,
    pub position: Position,
    pub party: Box<dyn Party>,
}

/// The parties a strategy places on the line, and who receives each
/// verifier's shares (`interceptors[j]` gets `V_j`'s messages).
pub struct Deployment {
    pub colluders: Vec<Colluder>,
    pub interceptors: [PartyId; 2],
}

pub trait ProverStrategy: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn spawn(&self, env: &ProverEnv) -> Result<Deployment, CompilerError>;
}

/// Both halves of one round's shares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundShares {
    pub block: usize,
    pub round: usize,
    pub x: BitString,
    pub s: BitString,
    pub y: BitString,
}

impl RoundShares {
    /// `ch = G_k(x xor y) xor s`, queried on behalf of `party`.
    pub fn challenge(&self, oracle: &Oracle, party: PartyId, now: Option<TimeStamp>) -> BitString {
        let z = self.x.xor(&self.y).expect("shares have the oracle input length");
        oracle
            .otp_decode(party, &z, &self.s, now)
            .expect("shares have the oracle lengths")
    }
}

/// Collects shares (direct or forwarded) until both halves of a round are in.
#[derive(Debug, Clone)]
pub struct ShareBook {
    input_bits: usize,
    output_bits: usize,
    first: BTreeMap<(usize, usize), (BitString, BitString)>,
    second: BTreeMap<(usize, usize), BitString>,
    done: BTreeSet<(usize, usize)>,
}

impl ShareBook {
    pub fn new(input_bits: usize, output_bits: usize) -> Self {
        ShareBook {
            input_bits,
            output_bits,
            first: BTreeMap::new(),
            second: BTreeMap::new(),
            done: BTreeSet::new(),
        }
    }

    pub fn for_env(env: &ProverEnv) -> Self {
        Self::new(env.input_bits(), env.output_bits())
    }

    /// Records `ev` if it carries a share. Returns the side (0 or 1).
    pub fn absorb(&mut self, ev: &Event) -> Option<usize> {
        let (b, i, body) = wire::unframe(&ev.msg.payload)?;
        match ev.msg.kind.as_str() {
            wire::SHARE0 | wire::FWD_SHARE0 => {
                let v = wire::decode_first(body, self.input_bits, self.output_bits)?;
                self.first.entry((b, i)).or_insert(v);
                Some(0)
            }
            wire::SHARE1 | wire::FWD_SHARE1 => {
                let v = wire::decode_second(body, self.input_bits)?;
                self.second.entry((b, i)).or_insert(v);
                Some(1)
            }
            _ => None,
        }
    }

    /// Rounds that became complete since the last call, in order.
    pub fn take_ready(&mut self) -> Vec<RoundShares> {
        let mut out = Vec::new();
        for (key, (x, s)) in &self.first {
            if self.done.contains(key) {
                continue;
            }
            if let Some(y) = self.second.get(key) {
                out.push(RoundShares {
                    block: key.0,
                    round: key.1,
                    x: x.clone(),
                    s: s.clone(),
                    y: y.clone(),
                });
            }
        }
        for r in &out {
            self.done.insert((r.block, r.round));
        }
        out
    }
}

/// Honest answering state: challenge history and the backend prover.
pub struct ProverCore {
    protocol: Arc<dyn CrProtocol>,
    public: Vec<Vec<u8>>,
    chs: Vec<Vec<BitString>>,
    answers: Vec<Vec<Answer>>,
    rng: ChaCha20Rng,
}

impl ProverCore {
    pub fn new(env: &ProverEnv, seed: Seed) -> Self {
        let blocks = env.schedule.blocks;
        ProverCore {
            protocol: env.protocol.clone(),
            public: env.public.clone(),
            chs: vec![Vec::new(); blocks],
            answers: vec![Vec::new(); blocks],
            rng: seed.rng(),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }

    /// Runs the backend prover on round `round` of `block`. Skipped rounds
    /// are filled with an all-zero challenge and an empty answer.
    pub fn answer(&mut self, block: usize, round: usize, ch: BitString) -> Answer {
        let bits = self.protocol.challenge_bits();
        let chs = &mut self.chs[block];
        let answers = &mut self.answers[block];
        while chs.len() + 1 < round {
            chs.push(BitString::zeros(bits));
            answers.push(Vec::new());
        }
        chs.push(ch);
        let ans = self.protocol.prove(round, &self.public[block], chs, answers, &mut self.rng);
        answers.push(ans.clone());
        ans
    }

    pub fn answers(&self, block: usize) -> &[Answer] {
        &self.answers[block]
    }
}

/// Answers each round as soon as both shares are in, to both verifiers.
pub struct HonestProver {
    verifiers: [PartyId; 2],
    oracle: Rc<Oracle>,
    book: ShareBook,
    core: ProverCore,
}

impl HonestProver {
    pub fn new(env: &ProverEnv, seed: Seed) -> Self {
        HonestProver {
            verifiers: env.verifiers,
            oracle: env.oracle.clone(),
            book: ShareBook::for_env(env),
            core: ProverCore::new(env, seed),
        }
    }
}

impl Party for HonestProver {
    fn on_activate(&mut self, ctx: &mut Context<'_>, inbox: &[Event]) {
        for ev in inbox {
            self.book.absorb(ev);
        }
        for r in self.book.take_ready() {
            let ch = r.challenge(&self.oracle, ctx.me(), ctx.now());
            let ans = self.core.answer(r.block, r.round, ch);
            let payload = wire::frame(r.block, r.round, &ans);
            for v in self.verifiers {
                let _ = ctx.send(v, wire::ANSWER, payload.clone());
            }
        }
    }
}

/// A single honest prover, at the claimed position shifted by `offset`.
#[derive(Debug, Clone, Default)]
pub struct HonestStrategy {
    pub offset: Rational,
}

impl HonestStrategy {
    pub fn displaced(offset: Rational) -> Self {
        HonestStrategy { offset }
    }
}

impl ProverStrategy for HonestStrategy {
    fn name(&self) -> String {
        if self.offset == Rational::default() {
            "honest".into()
        } else {
            format!("displaced-honest({})", self.offset)
        }
    }

    fn spawn(&self, env: &ProverEnv) -> Result<Deployment, CompilerError> {
        let id = env.first_id;
        let claimed = env.schedule.geometry.claimed;
        Ok(Deployment {
            colluders: vec![Colluder {
                id,
                position: Position::new(claimed.value() + self.offset),
                party: Box::new(HonestProver::new(env, env.colluder_seed(0))),
            }],
            interceptors: [id, id],
        })
    }
}
