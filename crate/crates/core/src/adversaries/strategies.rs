use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;
use std::sync::Arc;

use rand_chacha::ChaCha20Rng;

use crate::compilers::{
    wire, Colluder, CompilerError, Deployment, ProverCore, ProverEnv, ProverStrategy, RoundSlot, Schedule, ShareBook,
};
use crate::crcore::{Answer, CrProtocol};
use crate::oracle::Oracle;
use crate::spacetime::{Context, Event, Party, PartyId, Position, Rational, TimeStamp};

use super::{StrategyKind, StrategyParams};

/// A configured strategy from the library.
#[derive(Debug, Clone)]
pub struct Strategy {
    pub kind: StrategyKind,
    pub params: StrategyParams,
}

/// Midway between the claimed position and each verifier.
pub fn default_pair_positions(schedule: &Schedule) -> [Position; 2] {
    let g = schedule.geometry;
    let mid = |a: Position, b: Position| Position::new((a.value() + b.value()) / Rational::from_integer(2));
    [mid(g.verifiers[0], g.claimed), mid(g.claimed, g.verifiers[1])]
}

impl Strategy {
    pub fn pair_positions(&self, schedule: &Schedule) -> [Position; 2] {
        self.params
            .positions
            .unwrap_or_else(|| default_pair_positions(schedule))
    }
}

impl ProverStrategy for Strategy {
    fn name(&self) -> String {
        match self.kind {
            StrategyKind::DisplacedHonest => format!("displaced-honest({})", self.params.offset),
            k => k.as_str().to_string(),
        }
    }

    fn spawn(&self, env: &ProverEnv) -> Result<Deployment, CompilerError> {
        let claimed = env.schedule.geometry.claimed;
        let single = |policy: SinglePolicy, position: Position| {
            let id = env.first_id;
            Deployment {
                colluders: vec![Colluder {
                    id,
                    position,
                    party: Box::new(SingleProver::new(env, policy)),
                }],
                interceptors: [id, id],
            }
        };
        let pair = |behaviour: PairBehaviour| {
            let pos = self.pair_positions(&env.schedule);
            let ids = [env.first_id, env.first_id + 1];
            let colluders = (0..2)
                .map(|j| Colluder {
                    id: ids[j],
                    position: pos[j],
                    party: Box::new(PairColluder::new(env, j, ids[1 - j], pos[j], behaviour)) as Box<dyn Party>,
                })
                .collect();
            Deployment {
                colluders,
                interceptors: ids,
            }
        };
        Ok(match self.kind {
            StrategyKind::Honest => single(SinglePolicy::Honest, claimed),
            StrategyKind::DisplacedHonest => {
                single(SinglePolicy::Honest, Position::new(claimed.value() + self.params.offset))
            }
            StrategyKind::UniformAnswer => single(SinglePolicy::Uniform, claimed),
            StrategyKind::ReplayPrevious => single(SinglePolicy::ReplayPrevious, claimed),
            StrategyKind::ForwardingPair => pair(PairBehaviour::Forward { share_answers: true }),
            StrategyKind::IndependentSamplePair => pair(PairBehaviour::Forward { share_answers: false }),
            StrategyKind::PrecommitAnswer => pair(PairBehaviour::Precommit),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SinglePolicy {
    Honest,
    /// A fresh challenge-independent answer every round.
    Uniform,
    /// Round `i` gets the honest answer computed for round `i - 1`.
    ReplayPrevious,
}

/// One prover that answers both verifiers once it holds both shares.
struct SingleProver {
    policy: SinglePolicy,
    verifiers: [PartyId; 2],
    oracle: Rc<Oracle>,
    protocol: Arc<dyn CrProtocol>,
    book: ShareBook,
    core: ProverCore,
}

impl SingleProver {
    fn new(env: &ProverEnv, policy: SinglePolicy) -> Self {
        SingleProver {
            policy,
            verifiers: env.verifiers,
            oracle: env.oracle.clone(),
            protocol: env.protocol.clone(),
            book: ShareBook::for_env(env),
            core: ProverCore::new(env, env.colluder_seed(0)),
        }
    }
}

impl Party for SingleProver {
    fn on_activate(&mut self, ctx: &mut Context<'_>, inbox: &[Event]) {
        for ev in inbox {
            self.book.absorb(ev);
        }
        for r in self.book.take_ready() {
            let ans = match self.policy {
                SinglePolicy::Uniform => self.protocol.guess(self.core.rng()),
                SinglePolicy::Honest | SinglePolicy::ReplayPrevious => {
                    let ch = r.challenge(&self.oracle, ctx.me(), ctx.now());
                    let fresh = self.core.answer(r.block, r.round, ch);
                    if self.policy == SinglePolicy::Honest {
                        fresh
                    } else if r.round == 1 {
                        self.protocol.guess(self.core.rng())
                    } else {
                        self.core.answers(r.block)[r.round - 2].clone()
                    }
                }
            };
            let payload = wire::frame(r.block, r.round, &ans);
            for v in self.verifiers {
                let _ = ctx.send(v, wire::ANSWER, payload.clone());
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairBehaviour {
    /// Swap shares with the peer, then answer at the last moment that still
    /// reaches the own verifier on time. With `share_answers`, each colluder
    /// also sends its answer to the peer and copies the peer's answer when it
    /// arrives before its own deadline.
    Forward { share_answers: bool },
    /// Both send the same answers, drawn from a seed fixed at setup.
    Precommit,
}

/// Colluder `j` of a pair: intercepts `V_j` and answers only `V_j`.
struct PairColluder {
    side: usize,
    peer: PartyId,
    verifier: PartyId,
    behaviour: PairBehaviour,
    oracle: Rc<Oracle>,
    book: ShareBook,
    core: ProverCore,
    slots: Vec<RoundSlot>,
    /// `(block, round) -> send deadline` for this colluder.
    deadlines: BTreeMap<(usize, usize), TimeStamp>,
    precommitted: BTreeMap<(usize, usize), Answer>,
    answered: BTreeSet<(usize, usize)>,
    peer_answers: BTreeMap<(usize, usize), Answer>,
    sent: BTreeSet<(usize, usize)>,
}

impl PairColluder {
    fn new(env: &ProverEnv, side: usize, peer: PartyId, position: Position, behaviour: PairBehaviour) -> Self {
        let verifier_pos = env.schedule.geometry.verifiers[side];
        let deadlines = env
            .schedule
            .slots
            .iter()
            .map(|s| {
                let d = position.distance(&verifier_pos);
                ((s.block, s.round), TimeStamp::new(s.expected[side].value() - d))
            })
            .collect();
        let mut precommitted = BTreeMap::new();
        if behaviour == PairBehaviour::Precommit {
            // both sides derive the identical table from a shared seed
            let mut shared: ChaCha20Rng = env.seed.derive("precommit", &[]).rng();
            for s in &env.schedule.slots {
                precommitted.insert((s.block, s.round), env.protocol.guess(&mut shared));
            }
        }
        PairColluder {
            side,
            peer,
            verifier: env.verifiers[side],
            behaviour,
            oracle: env.oracle.clone(),
            book: ShareBook::for_env(env),
            core: ProverCore::new(env, env.colluder_seed(side as u64)),
            slots: env.schedule.slots.clone(),
            deadlines,
            precommitted,
            answered: BTreeSet::new(),
            peer_answers: BTreeMap::new(),
            sent: BTreeSet::new(),
        }
    }

    fn send_answer(&mut self, ctx: &mut Context<'_>, key: (usize, usize), ans: Answer) {
        self.sent.insert(key);
        let _ = ctx.send(self.verifier, wire::ANSWER, wire::frame(key.0, key.1, &ans));
    }
}

impl Party for PairColluder {
    fn on_start(&mut self, ctx: &mut Context<'_>) {
        if self.behaviour == PairBehaviour::Precommit {
            for t in self.deadlines.values() {
                let _ = ctx.wake_at(*t);
            }
        }
    }

    fn on_activate(&mut self, ctx: &mut Context<'_>, inbox: &[Event]) {
        let now = ctx.now().expect("activations carry a time");
        if self.behaviour == PairBehaviour::Precommit {
            let due: Vec<_> = self
                .deadlines
                .iter()
                .filter(|(k, t)| **t <= now && !self.sent.contains(k))
                .map(|(k, _)| *k)
                .collect();
            for key in due {
                let ans = self.precommitted[&key].clone();
                self.send_answer(ctx, key, ans);
            }
            return;
        }
        let PairBehaviour::Forward { share_answers } = self.behaviour else {
            unreachable!()
        };
        for ev in inbox {
            let from_verifier = ev.msg.sender == self.verifier;
            if self.book.absorb(ev).is_some() && from_verifier {
                let kind = if self.side == 0 { wire::FWD_SHARE0 } else { wire::FWD_SHARE1 };
                let _ = ctx.send(self.peer, kind, ev.msg.payload.clone());
            }
            if ev.msg.kind == wire::PEER_ANSWER {
                if let Some((b, i, body)) = wire::unframe(&ev.msg.payload) {
                    self.peer_answers.entry((b, i)).or_insert_with(|| body.to_vec());
                }
            }
        }
        for r in self.book.take_ready() {
            let ch = r.challenge(&self.oracle, ctx.me(), ctx.now());
            // sample now so the rng stream does not depend on timing
            self.core.answer(r.block, r.round, ch);
            self.answered.insert((r.block, r.round));
            let deadline = self.deadlines[&(r.block, r.round)];
            if deadline > now {
                let _ = ctx.wake_at(deadline);
            }
        }
        let ready: Vec<(usize, usize)> = self
            .slots
            .iter()
            .map(|s| (s.block, s.round))
            .filter(|k| self.answered.contains(k) && !self.sent.contains(k) && self.deadlines[k] <= now)
            .collect();
        for key in ready {
            let own = self.core.answers(key.0)[key.1 - 1].clone();
            let ans = if share_answers {
                self.peer_answers.get(&key).cloned().unwrap_or_else(|| own.clone())
            } else {
                own.clone()
            };
            self.send_answer(ctx, key, ans);
            if share_answers && !self.peer_answers.contains_key(&key) {
                let _ = ctx.send(self.peer, wire::PEER_ANSWER, wire::frame(key.0, key.1, &own));
            }
        }
    }
}
