//! Certified-randomness protocols in Gen/Ver form: a deterministic challenge
//! generator per round, an honest prover, and a transcript verifier that is a
//! pure function of `(challenges, answers, r)`.

mod mock;
mod rcs;

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use mock::{mock_backend, MockKind, MockProtocol};
pub use rcs::{gen_challenge, honest_prove_rcs, verify_rcs, RcsBackendConfig, RcsProtocol};

use crate::bits::BitString;
use crate::qsim::QsimError;
use crate::seed::Seed;

/// Raw answer bytes as sent over the wire.
pub type Answer = Vec<u8>;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum CrError {
    #[error("round {index} out of range 1..={rounds}")]
    IndexOutOfRange { index: usize, rounds: usize },
    #[error("expected {expected} prior answers, got {got}")]
    HistoryLength { expected: usize, got: usize },
    #[error("unknown mock backend {0:?}")]
    UnknownKind(String),
    #[error("invalid backend config: {0}")]
    Config(String),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

pub trait CrProtocol: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn rounds(&self) -> usize;

    /// Whether `gen` reads earlier answers.
    fn adaptive(&self) -> bool;

    fn challenge_bits(&self) -> usize;

    /// Public parameters derived from `r` and handed to provers at setup.
    fn publish(&self, _r: &Seed) -> Vec<u8> {
        Vec::new()
    }

    /// `ch_i = Gen_i(ans_1, ..., ans_{i-1}; r)` with `i` counted from 1.
    fn gen(&self, i: usize, prior: &[Answer], r: &Seed) -> Result<BitString, CrError>;

    /// Honest answer to round `i` given all challenges so far.
    fn prove(
        &self,
        i: usize,
        public: &[u8],
        challenges: &[BitString],
        prior: &[Answer],
        rng: &mut dyn RngCore,
    ) -> Answer;

    /// A well-formed answer produced without looking at the challenge.
    fn guess(&self, rng: &mut dyn RngCore) -> Answer;

    /// The single most probable honest answer to `ch`, if the backend can name it.
    fn most_likely(&self, _public: &[u8], _ch: &BitString) -> Option<Answer> {
        None
    }

    fn verify(&self, challenges: &[BitString], answers: &[Answer], r: &Seed) -> CrTranscript;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrRound {
    pub ch_hex: String,
    pub ans_hex: Vec<String>,
    #[serde(rename = "T")]
    pub test: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrTranscript {
    pub rounds: Vec<CrRound>,
    pub total_score: Option<f64>,
    pub accept: bool,
    /// Accepted only because no round was selected for testing.
    #[serde(default)]
    pub vacuous: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl CrTranscript {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("transcript serializes")
    }

    pub fn rejected(rounds: Vec<CrRound>, error: String) -> Self {
        CrTranscript {
            rounds,
            total_score: None,
            accept: false,
            vacuous: false,
            error: Some(error),
        }
    }
}

pub(crate) fn check_index(i: usize, prior: &[Answer], rounds: usize) -> Result<(), CrError> {
    if i == 0 || i > rounds {
        return Err(CrError::IndexOutOfRange { index: i, rounds });
    }
    if prior.len() != i - 1 {
        return Err(CrError::HistoryLength {
            expected: i - 1,
            got: prior.len(),
        });
    }
    Ok(())
}

/// Runs the honest prover against `Gen` for every round and verifies.
pub fn honest_transcript(
    protocol: &dyn CrProtocol,
    r: &Seed,
    rng: &mut dyn RngCore,
) -> Result<(Vec<BitString>, Vec<Answer>, CrTranscript), CrError> {
    let public = protocol.publish(r);
    let mut chs = Vec::new();
    let mut answers = Vec::new();
    for i in 1..=protocol.rounds() {
        chs.push(protocol.gen(i, &answers, r)?);
        let a = protocol.prove(i, &public, &chs, &answers, rng);
        answers.push(a);
    }
    let t = protocol.verify(&chs, &answers, r);
    Ok((chs, answers, t))
}
