//! Prover and colluder strategies for compiled runs, a referee for the
//! standalone guessing games, and parameter sweeps over both.
//!
//! All strategies are classical and obey the light cone; the fabric drops
//! any send that would not.

mod game;
mod strategies;
mod sweep;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use game::{
    play_guessing_game, run_guessing_game, CommMode, GameReport, GameTrial, GuesserKind, GuessingGameConfig,
    ProverKind, GAME_GUESSER, GAME_PROVER, GAME_VERIFIER,
};
pub use strategies::{default_pair_positions, Strategy};
pub use sweep::{replay_cell, sweep, SweepGrid, SweepRow, SWEEP_CSV_HEADER};

use crate::compilers::{wire, CompilerError};
use crate::spacetime::{EventLog, PartyId, Position, Rational, SpacetimeError};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum AdversaryError {
    #[error("unknown strategy {0:?}")]
    UnknownKind(String),
    #[error("communication mode {mode} forbids: {detail}")]
    CommModeViolation { mode: String, detail: String },
    #[error(transparent)]
    Compiler(#[from] CompilerError),
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Honest,
    /// The honest prover, moved away from the claimed position.
    DisplacedHonest,
    /// Two colluders swap shares and answer their own verifier just in
    /// time; each also passes its answer to the other.
    ForwardingPair,
    /// As the forwarding pair, but each samples on its own.
    IndependentSamplePair,
    /// Two colluders send identical answers fixed before the run.
    PrecommitAnswer,
    /// One prover sends challenge-independent answers on time.
    UniformAnswer,
    /// One prover sends round `i - 1`'s honest answer in round `i`.
    ReplayPrevious,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 7] = [
        StrategyKind::Honest,
        StrategyKind::DisplacedHonest,
        StrategyKind::ForwardingPair,
        StrategyKind::IndependentSamplePair,
        StrategyKind::PrecommitAnswer,
        StrategyKind::UniformAnswer,
        StrategyKind::ReplayPrevious,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyKind::Honest => "honest",
            StrategyKind::DisplacedHonest => "displaced-honest",
            StrategyKind::ForwardingPair => "forwarding-pair",
            StrategyKind::IndependentSamplePair => "independent-sample-pair",
            StrategyKind::PrecommitAnswer => "precommit-answer",
            StrategyKind::UniformAnswer => "uniform-answer",
            StrategyKind::ReplayPrevious => "replay-previous",
        }
    }

    pub fn is_pair(&self) -> bool {
        matches!(
            self,
            StrategyKind::ForwardingPair | StrategyKind::IndependentSamplePair | StrategyKind::PrecommitAnswer
        )
    }
}

impl FromStr for StrategyKind {
    type Err = AdversaryError;

    fn from_str(s: &str) -> Result<Self, AdversaryError> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| AdversaryError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyParams {
    /// Displacement for `displaced-honest`.
    #[serde(with = "crate::spacetime::serde_rational")]
    pub offset: Rational,
    /// Colluder positions for pair strategies; defaults to
    /// [`default_pair_positions`].
    pub positions: Option<[Position; 2]>,
}

impl Default for StrategyParams {
    fn default() -> Self {
        StrategyParams {
            offset: Rational::new(1, 5),
            positions: None,
        }
    }
}

/// Builds a strategy by name.
pub fn strategy(kind: &str, params: StrategyParams) -> Result<Strategy, AdversaryError> {
    Ok(Strategy {
        kind: kind.parse()?,
        params,
    })
}

/// Whether anything `b` sent from its first answer on could have reached an
/// answer `a` gave, and vice versa. `true` means no such influence exists.
pub fn no_communication_holds(log: &EventLog, a: PartyId, b: PartyId) -> bool {
    let first_answer = |p: PartyId| {
        log.events()
            .iter()
            .filter(|e| e.msg.sender == p && e.msg.kind == wire::ANSWER)
            .map(|e| e.msg.t_send)
            .min()
    };
    for (me, other) in [(a, b), (b, a)] {
        let Some(cut) = first_answer(other) else {
            continue;
        };
        for ev in log
            .events()
            .iter()
            .filter(|e| e.msg.sender == me && e.msg.kind == wire::ANSWER)
        {
            let anc = log.causal_ancestry(ev.id).expect("event from this log");
            if anc.iter().any(|id| {
                let src = &log.events()[id.0];
                src.msg.sender == other && src.msg.t_send >= cut
            }) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip_by_name() {
        for k in StrategyKind::ALL {
            assert_eq!(k.as_str().parse::<StrategyKind>().unwrap(), k);
        }
        assert!(matches!(strategy("teleport", StrategyParams::default()), Err(AdversaryError::UnknownKind(_))));
    }
}
