use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{check_index, Answer, CrError, CrProtocol, CrRound, CrTranscript};
use crate::bits::BitString;
use crate::seed::Seed;

const MOCK_CHALLENGE_BITS: usize = 64;

/// Trivial backends for exercising the compilers without a real test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MockKind {
    /// Random 8-byte answers; every transcript accepts.
    AlwaysAccept,
    /// `ans = SHA-256("det" || ch)[..8]`; accepts exactly that answer.
    DeterministicAnswer,
    /// `bits` uniformly random bits per round; any well-formed answer accepts.
    CoinFlip { bits: usize },
}

impl FromStr for MockKind {
    type Err = CrError;

    fn from_str(s: &str) -> Result<Self, CrError> {
        match s {
            "always-accept" => Ok(MockKind::AlwaysAccept),
            "deterministic-answer" => Ok(MockKind::DeterministicAnswer),
            "coin-flip" => Ok(MockKind::CoinFlip { bits: 8 }),
            _ => match s.strip_prefix("coin-flip:").map(str::parse) {
                Some(Ok(bits)) if bits > 0 => Ok(MockKind::CoinFlip { bits }),
                _ => Err(CrError::UnknownKind(s.to_string())),
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct MockProtocol {
    kind: MockKind,
    rounds: usize,
}

/// Looks up a mock by name: `always-accept`, `deterministic-answer`,
/// `coin-flip` (8 bits) or `coin-flip:B`.
pub fn mock_backend(kind: &str, rounds: usize) -> Result<MockProtocol, CrError> {
    if rounds == 0 {
        return Err(CrError::Config("rounds must be at least 1".into()));
    }
    Ok(MockProtocol {
        kind: kind.parse()?,
        rounds,
    })
}

impl MockProtocol {
    pub fn new(kind: MockKind, rounds: usize) -> Self {
        MockProtocol { kind, rounds }
    }

    pub fn kind(&self) -> MockKind {
        self.kind
    }

    fn deterministic(ch: &BitString) -> Answer {
        let mut h = Sha256::new();
        h.update(b"det");
        h.update(ch.as_bytes());
        h.finalize()[..8].to_vec()
    }

    fn answer_len(&self) -> usize {
        match self.kind {
            MockKind::CoinFlip { bits } => bits.div_ceil(8),
            _ => 8,
        }
    }

    fn random_answer(&self, rng: &mut dyn RngCore) -> Answer {
        match self.kind {
            MockKind::CoinFlip { bits } => BitString::random(bits, rng).as_bytes().to_vec(),
            _ => {
                let mut a = vec![0u8; 8];
                rng.fill_bytes(&mut a);
                a
            }
        }
    }
}

impl CrProtocol for MockProtocol {
    fn name(&self) -> String {
        match self.kind {
            MockKind::AlwaysAccept => "always-accept".into(),
            MockKind::DeterministicAnswer => "deterministic-answer".into(),
            MockKind::CoinFlip { bits } => format!("coin-flip:{bits}"),
        }
    }

    fn rounds(&self) -> usize {
        self.rounds
    }

    fn adaptive(&self) -> bool {
        false
    }

    fn challenge_bits(&self) -> usize {
        MOCK_CHALLENGE_BITS
    }

    fn gen(&self, i: usize, prior: &[Answer], r: &Seed) -> Result<BitString, CrError> {
        check_index(i, prior, self.rounds)?;
        let bytes = r.derive("cr/mock/challenge", &[i as u64]).expand("ch", 8);
        Ok(BitString::from_bytes(MOCK_CHALLENGE_BITS, &bytes))
    }

    fn prove(&self, i: usize, _: &[u8], challenges: &[BitString], _: &[Answer], rng: &mut dyn RngCore) -> Answer {
        match self.kind {
            MockKind::DeterministicAnswer => Self::deterministic(&challenges[i - 1]),
            _ => self.random_answer(rng),
        }
    }

    fn guess(&self, rng: &mut dyn RngCore) -> Answer {
        self.random_answer(rng)
    }

    fn most_likely(&self, _: &[u8], ch: &BitString) -> Option<Answer> {
        match self.kind {
            MockKind::DeterministicAnswer => Some(Self::deterministic(ch)),
            _ => None,
        }
    }

    fn verify(&self, challenges: &[BitString], answers: &[Answer], _r: &Seed) -> CrTranscript {
        let rounds: Vec<CrRound> = challenges
            .iter()
            .zip(answers)
            .map(|(ch, a)| CrRound {
                ch_hex: ch.to_hex(),
                ans_hex: vec![hex::encode(a)],
                test: true,
                score: None,
            })
            .collect();
        if challenges.len() != answers.len() {
            return CrTranscript::rejected(rounds, "challenge/answer count mismatch".into());
        }
        let ok = match self.kind {
            MockKind::AlwaysAccept => true,
            MockKind::DeterministicAnswer => challenges
                .iter()
                .zip(answers)
                .all(|(ch, a)| *a == Self::deterministic(ch)),
            MockKind::CoinFlip { .. } => answers.iter().all(|a| a.len() == self.answer_len()),
        };
        CrTranscript {
            rounds,
            total_score: None,
            accept: ok,
            vacuous: false,
            error: None,
        }
    }
}
