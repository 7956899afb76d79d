use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{check_index, Answer, CrError, CrProtocol, CrRound, CrTranscript};
use crate::bits::BitString;
use crate::qsim::{self, build_circuit, AnsatzConfig, SampleSet};
use crate::seed::Seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RcsBackendConfig {
    pub n_qubits: usize,
    pub depth: usize,
    /// Samples per round.
    pub k: usize,
    /// Probability that a round is a test round.
    pub gamma: f64,
    /// Score margin; the threshold is `(1 + delta) / N`.
    pub delta: f64,
    pub challenge_bits: usize,
    pub seed_bits: usize,
}

impl Default for RcsBackendConfig {
    fn default() -> Self {
        RcsBackendConfig {
            n_qubits: 8,
            depth: 12,
            k: 100,
            gamma: 0.5,
            delta: 0.5,
            challenge_bits: 256,
            seed_bits: 128,
        }
    }
}

impl RcsBackendConfig {
    pub fn validate(&self) -> Result<(), CrError> {
        let bad = |m: String| Err(CrError::Config(m));
        if self.n_qubits == 0 || self.n_qubits > qsim::MAX_QUBITS {
            return bad(format!("n_qubits must be in 1..={}, got {}", qsim::MAX_QUBITS, self.n_qubits));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if self.challenge_bits < self.seed_bits {
            return bad(format!(
                "challenge_bits {} below the ansatz seed requirement {}",
                self.challenge_bits, self.seed_bits
            ));
        }
        Ok(())
    }

    pub fn ansatz(&self) -> AnsatzConfig {
        AnsatzConfig {
            n_qubits: self.n_qubits,
            depth: self.depth,
            seed_bits: self.seed_bits,
        }
    }

    pub fn dimension(&self) -> f64 {
        (1u64 << self.n_qubits) as f64
    }

    pub fn threshold(&self) -> f64 {
        (1.0 + self.delta) / self.dimension()
    }
}

/// `ch_i` for a non-adaptive RCS verifier: a PRF of `(r, i)` only.
pub fn gen_challenge(cfg: &RcsBackendConfig, rounds: usize, i: usize, r: &Seed) -> Result<BitString, CrError> {
    if i == 0 || i > rounds {
        return Err(CrError::IndexOutOfRange { index: i, rounds });
    }
    let bytes = r
        .derive("cr/rcs/challenge", &[i as u64])
        .expand("ch", cfg.challenge_bits.div_ceil(8));
    Ok(BitString::from_bytes(cfg.challenge_bits, &bytes))
}

fn test_flag(cfg: &RcsBackendConfig, i: usize, r: &Seed) -> bool {
    r.derive("cr/rcs/test", &[i as u64]).unit_f64("T") < cfg.gamma
}

/// `k` samples from the exact output distribution of `C(ch)`, encoded as
/// two big-endian bytes each.
pub fn honest_prove_rcs(cfg: &RcsBackendConfig, ch: &BitString, rng: &mut dyn RngCore) -> Result<Answer, CrError> {
    let c = build_circuit(ch, &cfg.ansatz())?;
    let sv = qsim::simulate(&c)?;
    Ok(qsim::sample(&sv, cfg.k, rng).encode())
}

/// Recomputes every test-round score from scratch and applies the threshold.
///
/// A transcript with no test rounds is accepted and flagged `vacuous`.
/// Malformed answers reject.
pub fn verify_rcs(cfg: &RcsBackendConfig, challenges: &[BitString], answers: &[Answer], r: &Seed) -> CrTranscript {
    let mut rounds = Vec::with_capacity(challenges.len());
    let mut scores = Vec::new();
    let mut error = None;
    if challenges.len() != answers.len() {
        error = Some(format!("{} challenges but {} answers", challenges.len(), answers.len()));
    }
    for (idx, (ch, ans)) in challenges.iter().zip(answers).enumerate() {
        let i = idx + 1;
        let test = test_flag(cfg, i, r);
        let decoded = SampleSet::decode(cfg.n_qubits, ans).and_then(|s| {
            if s.len() == cfg.k {
                Ok(s)
            } else {
                Err(qsim::QsimError::Encoding(format!("{} samples, expected {}", s.len(), cfg.k)))
            }
        });
        let mut round = CrRound {
            ch_hex: ch.to_hex(),
            ans_hex: ans.chunks(2).map(hex::encode).collect(),
            test,
            score: None,
        };
        match decoded {
            Err(e) => {
                error.get_or_insert(format!("round {i}: {e}"));
            }
            Ok(samples) if test => match build_circuit(ch, &cfg.ansatz()).and_then(|c| qsim::xhog_score(&c, &samples)) {
                Ok(s) => {
                    round.score = Some(s);
                    scores.push(s);
                }
                Err(e) => {
                    error.get_or_insert(format!("round {i}: {e}"));
                }
            },
            Ok(_) => {}
        }
        rounds.push(round);
    }
    if let Some(e) = error {
        return CrTranscript::rejected(rounds, e);
    }
    if scores.is_empty() {
        return CrTranscript {
            rounds,
            total_score: None,
            accept: true,
            vacuous: true,
            error: None,
        };
    }
    let total = scores.iter().sum::<f64>() / scores.len() as f64;
    CrTranscript {
        rounds,
        total_score: Some(total),
        accept: total >= cfg.threshold(),
        vacuous: false,
        error: None,
    }
}

/// Random circuit sampling as a multi-round protocol with fresh circuits
/// every round and spot-checked cross-entropy scoring.
#[derive(Debug, Clone)]
pub struct RcsProtocol {
    cfg: RcsBackendConfig,
    rounds: usize,
}

impl RcsProtocol {
    pub fn new(cfg: RcsBackendConfig, rounds: usize) -> Result<Self, CrError> {
        cfg.validate()?;
        if rounds == 0 {
            return Err(CrError::Config("rounds must be at least 1".into()));
        }
        Ok(RcsProtocol { cfg, rounds })
    }

    pub fn config(&self) -> &RcsBackendConfig {
        &self.cfg
    }
}

impl CrProtocol for RcsProtocol {
    fn name(&self) -> String {
        "rcs".into()
    }

    fn rounds(&self) -> usize {
        self.rounds
    }

    fn adaptive(&self) -> bool {
        false
    }

    fn challenge_bits(&self) -> usize {
        self.cfg.challenge_bits
    }

    fn gen(&self, i: usize, prior: &[Answer], r: &Seed) -> Result<BitString, CrError> {
        check_index(i, prior, self.rounds)?;
        gen_challenge(&self.cfg, self.rounds, i, r)
    }

    fn prove(&self, i: usize, _: &[u8], challenges: &[BitString], _: &[Answer], rng: &mut dyn RngCore) -> Answer {
        honest_prove_rcs(&self.cfg, &challenges[i - 1], rng).expect("validated config accepts its own challenges")
    }

    fn guess(&self, rng: &mut dyn RngCore) -> Answer {
        let n = 1u32 << self.cfg.n_qubits;
        SampleSet {
            n_qubits: self.cfg.n_qubits,
            samples: (0..self.cfg.k).map(|_| rng.gen_range(0..n)).collect(),
        }
        .encode()
    }

    fn most_likely(&self, _: &[u8], ch: &BitString) -> Option<Answer> {
        let c = build_circuit(ch, &self.cfg.ansatz()).ok()?;
        let probs = qsim::simulate(&c).ok()?.probabilities();
        let mut best = 0;
        for (z, p) in probs.iter().enumerate() {
            if *p > probs[best] {
                best = z;
            }
        }
        Some(
            SampleSet {
                n_qubits: self.cfg.n_qubits,
                samples: vec![best as u32; self.cfg.k],
            }
            .encode(),
        )
    }

    fn verify(&self, challenges: &[BitString], answers: &[Answer], r: &Seed) -> CrTranscript {
        verify_rcs(&self.cfg, challenges, answers, r)
    }
}
