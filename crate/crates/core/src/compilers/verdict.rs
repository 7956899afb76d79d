use num_traits::Signed;
use serde::{Deserialize, Serialize};

use super::config::CompilerConfig;
use crate::bits::BitString;
use crate::crcore::{Answer, CrProtocol, CrTranscript};
use crate::seed::Seed;
use crate::spacetime::TimeStamp;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceivedAnswer {
    pub t: TimeStamp,
    #[serde(with = "hex::serde")]
    pub ans: Answer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub block: usize,
    pub round: usize,
    pub ch: String,
    pub x: String,
    pub s: String,
    pub y: String,
    pub sent: [TimeStamp; 2],
    pub expected: [TimeStamp; 2],
    /// First answer each verifier received for this round.
    pub answers: [Option<ReceivedAnswer>; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRecord {
    /// Backend verifier randomness for this block.
    pub r: Seed,
    pub rounds: Vec<RoundRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub challenge_bits: usize,
    pub key: String,
    pub blocks: Vec<BlockRecord>,
}

impl Transcript {
    pub fn challenges(&self, block: usize) -> Vec<BitString> {
        self.blocks[block]
            .rounds
            .iter()
            .map(|r| BitString::from_hex(self.challenge_bits, &r.ch).expect("recorded challenge"))
            .collect()
    }

    /// Answers received by verifier `j` in `block`; missing ones are empty.
    pub fn answers_at(&self, block: usize, j: usize) -> Vec<Answer> {
        self.blocks[block]
            .rounds
            .iter()
            .map(|r| r.answers[j].as_ref().map(|a| a.ans.clone()).unwrap_or_default())
            .collect()
    }

    pub fn rounds(&self) -> impl Iterator<Item = &RoundRecord> {
        self.blocks.iter().flat_map(|b| b.rounds.iter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RejectReason {
    Timing,
    Consistency,
    CRTest,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RejectReason::Timing => "Timing",
            RejectReason::Consistency => "Consistency",
            RejectReason::CRTest => "CRTest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingCheck {
    pub block: usize,
    pub round: usize,
    pub verifier: usize,
    pub expected: TimeStamp,
    pub actual: Option<TimeStamp>,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub timing: Vec<TimingCheck>,
    /// 1-based round indices, counted across blocks, where `ans != ans'`.
    pub mismatches: Vec<usize>,
    /// Backend verdict per block; empty when an earlier check failed.
    pub cr: Vec<CrTranscript>,
    pub blocks_passed: usize,
    pub blocks_required: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub accept: bool,
    pub reason: Option<RejectReason>,
    pub diagnostics: Diagnostics,
}

impl Verdict {
    /// Mean backend score over blocks that produced one.
    pub fn score(&self) -> Option<f64> {
        let s: Vec<f64> = self.diagnostics.cr.iter().filter_map(|t| t.total_score).collect();
        if s.is_empty() {
            None
        } else {
            Some(s.iter().sum::<f64>() / s.len() as f64)
        }
    }

    pub fn reason_str(&self) -> &'static str {
        self.reason.map_or("None", |r| r.as_str())
    }

    fn reject(reason: RejectReason, diagnostics: Diagnostics) -> Self {
        Verdict {
            accept: false,
            reason: Some(reason),
            diagnostics,
        }
    }
}

/// Timing, then Consistency, then the backend test; the first failure wins.
pub fn verdict_checks(transcript: &Transcript, cfg: &CompilerConfig, protocol: &dyn CrProtocol) -> Verdict {
    let mut diag = Diagnostics {
        blocks_required: cfg.required_blocks(),
        ..Default::default()
    };
    let mut timing_ok = true;
    for r in transcript.rounds() {
        for j in 0..2 {
            let actual = r.answers[j].as_ref().map(|a| a.t);
            let ok = actual.is_some_and(|t| (t.value() - r.expected[j].value()).abs() <= cfg.tau);
            timing_ok &= ok;
            diag.timing.push(TimingCheck {
                block: r.block,
                round: r.round,
                verifier: j,
                expected: r.expected[j],
                actual,
                ok,
            });
        }
    }
    if !timing_ok {
        return Verdict::reject(RejectReason::Timing, diag);
    }

    for (idx, r) in transcript.rounds().enumerate() {
        let a = r.answers[0].as_ref().map(|a| &a.ans);
        let b = r.answers[1].as_ref().map(|a| &a.ans);
        if a != b {
            diag.mismatches.push(idx + 1);
        }
    }
    if !diag.mismatches.is_empty() {
        return Verdict::reject(RejectReason::Consistency, diag);
    }

    for (b, block) in transcript.blocks.iter().enumerate() {
        let t = protocol.verify(&transcript.challenges(b), &transcript.answers_at(b, 0), &block.r);
        if t.accept {
            diag.blocks_passed += 1;
        }
        diag.cr.push(t);
    }
    if diag.blocks_passed < diag.blocks_required {
        return Verdict::reject(RejectReason::CRTest, diag);
    }
    Verdict {
        accept: true,
        reason: None,
        diagnostics: diag,
    }
}
