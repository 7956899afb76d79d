//! Referee for the multi-round guessing game: each round a verifier sends
//! `ch_i` to a prover `P` and a guesser `Q`, `P` answers, `Q` guesses, and
//! then the two may talk as the communication mode allows. The pair wins when
//! the verifier accepts and every guess equals the answer.
//!
//! The game runs on the spacetime fabric with `V` at 0, `P` at -1 and `Q` at
//! +1. Challenge `i` leaves `V` at `4(i - 1)` and reaches both players at
//! `4i - 3`; answers and guesses count only if they reach `V` by `4i - 2`,
//! i.e. if they were sent on receipt. A `P`-`Q` message takes 2 time units,
//! so nothing said in round `i` can reach the other player before its
//! round-`i` move is fixed.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;
use std::sync::Arc;

use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AdversaryError;
use crate::bits::BitString;
use crate::compilers::wire;
use crate::crcore::{Answer, CrProtocol};
use crate::seed::Seed;
use crate::spacetime::{
    int, Context, Event, EventLog, Party, PartyId, Position, Simulator, SpacetimeError, SpacetimeMessage,
    SendPolicy, TimeStamp,
};

pub const GAME_VERIFIER: PartyId = 0;
pub const GAME_PROVER: PartyId = 1;
pub const GAME_GUESSER: PartyId = 2;

const CHALLENGE: &str = "challenge";
const GUESS: &str = "guess";
const TALK: &str = "talk";

/// Round spacing; challenge `i` leaves the verifier at `ROUND * (i - 1)`.
const ROUND: i128 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommMode {
    /// Unlimited messages between rounds.
    Free,
    /// Per round at most one message each way, both sent at the same time.
    SimultaneousOneRound,
    None,
}

impl CommMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommMode::Free => "free",
            CommMode::SimultaneousOneRound => "simultaneous-one-round",
            CommMode::None => "none",
        }
    }
}

impl fmt::Display for CommMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CommMode {
    type Err = AdversaryError;

    fn from_str(s: &str) -> Result<Self, AdversaryError> {
        [CommMode::Free, CommMode::SimultaneousOneRound, CommMode::None]
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| AdversaryError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProverKind {
    Honest,
    /// Honest, and tells `Q` its answer once the round's guess is fixed.
    HonestSharing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuesserKind {
    /// Runs its own copy of the honest prover.
    CopyProver,
    /// The backend's single most probable answer, else a blind guess.
    MostLikely,
    /// As `CopyProver`, with the answer history replaced by whatever `P`
    /// has reported so far.
    Echo,
}

#[derive(Debug, Clone)]
pub struct GuessingGameConfig {
    pub comm_mode: CommMode,
    pub protocol: Arc<dyn CrProtocol>,
    pub prover: ProverKind,
    pub guesser: GuesserKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameTrial {
    pub seed: Seed,
    pub accept: bool,
    pub win: bool,
    /// Rounds in which the guess equalled the answer.
    pub matches: usize,
    #[serde(with = "hex_list")]
    pub answers: Vec<Answer>,
    #[serde(with = "hex_list")]
    pub guesses: Vec<Answer>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameReport {
    pub comm_mode: CommMode,
    pub trials: usize,
    pub wins: usize,
    pub accepts: usize,
    pub win_rate: f64,
    pub accept_rate: f64,
    /// Mean fraction of rounds whose guess matched.
    pub round_match_rate: f64,
}

mod hex_list {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &[Vec<u8>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(hex::encode))
    }
}

#[derive(Default)]
struct Record {
    answers: BTreeMap<usize, Answer>,
    guesses: BTreeMap<usize, Answer>,
    challenges: Vec<BitString>,
}

fn deadline(i: usize) -> TimeStamp {
    TimeStamp::new(int(ROUND * i as i128 - 2))
}

struct GameVerifier {
    protocol: Arc<dyn CrProtocol>,
    r: Seed,
    record: Rc<RefCell<Record>>,
}

impl GameVerifier {
    fn history(&self, upto: usize) -> Vec<Answer> {
        let rec = self.record.borrow();
        (1..upto)
            .map(|i| rec.answers.get(&i).cloned().unwrap_or_default())
            .collect()
    }
}

impl Party for GameVerifier {
    fn on_start(&mut self, ctx: &mut Context<'_>) {
        for i in 0..self.protocol.rounds() {
            let _ = ctx.wake_at(TimeStamp::new(int(ROUND * i as i128)));
        }
    }

    fn on_activate(&mut self, ctx: &mut Context<'_>, inbox: &[Event]) {
        let now = ctx.now().expect("activations carry a time");
        for ev in inbox {
            let Some((_, i, body)) = wire::unframe(&ev.msg.payload) else {
                continue;
            };
            if i == 0 || ev.msg.t_arrive > deadline(i) {
                continue;
            }
            let mut rec = self.record.borrow_mut();
            let slot = match (ev.msg.sender, ev.msg.kind.as_str()) {
                (GAME_PROVER, wire::ANSWER) => &mut rec.answers,
                (GAME_GUESSER, GUESS) => &mut rec.guesses,
                _ => continue,
            };
            slot.entry(i).or_insert_with(|| body.to_vec());
        }
        let rounds = self.protocol.rounds();
        let i = (now.value() / int(ROUND)).to_integer() as usize + 1;
        let fires = now.value() == int(ROUND * (i as i128 - 1));
        if !fires || i > rounds || self.record.borrow().challenges.len() >= i {
            return;
        }
        let prior = self.history(i);
        let Ok(ch) = self.protocol.gen(i, &prior, &self.r) else {
            return;
        };
        let payload = wire::frame(0, i, ch.as_bytes());
        self.record.borrow_mut().challenges.push(ch);
        for p in [GAME_PROVER, GAME_GUESSER] {
            let _ = ctx.send(p, CHALLENGE, payload.clone());
        }
    }
}

/// `P` or `Q`: sees each challenge, answers or guesses on receipt, then
/// optionally talks.
struct Player {
    role: PartyId,
    protocol: Arc<dyn CrProtocol>,
    public: Vec<u8>,
    prover: ProverKind,
    guesser: GuesserKind,
    rng: ChaCha20Rng,
    challenges: Vec<BitString>,
    mine: Vec<Answer>,
    heard: BTreeMap<usize, Answer>,
}

impl Player {
    fn prior(&self, i: usize) -> Vec<Answer> {
        if self.role == GAME_GUESSER && self.guesser == GuesserKind::Echo {
            (1..i)
                .map(|j| self.heard.get(&j).cloned().unwrap_or_else(|| self.mine[j - 1].clone()))
                .collect()
        } else {
            self.mine.clone()
        }
    }

    fn move_for(&mut self, i: usize) -> Answer {
        let prior = self.prior(i);
        if self.role == GAME_GUESSER && self.guesser == GuesserKind::MostLikely {
            let ch = &self.challenges[i - 1];
            if let Some(a) = self.protocol.most_likely(&self.public, ch) {
                return a;
            }
            return self.protocol.guess(&mut self.rng);
        }
        self.protocol
            .prove(i, &self.public, &self.challenges, &prior, &mut self.rng)
    }
}

impl Party for Player {
    fn on_activate(&mut self, ctx: &mut Context<'_>, inbox: &[Event]) {
        let bits = self.protocol.challenge_bits();
        for ev in inbox {
            let Some((_, i, body)) = wire::unframe(&ev.msg.payload) else {
                continue;
            };
            match ev.msg.kind.as_str() {
                TALK => {
                    self.heard.insert(i, body.to_vec());
                }
                CHALLENGE if i == self.challenges.len() + 1 => {
                    self.challenges.push(BitString::from_bytes(bits, body));
                    let a = self.move_for(i);
                    self.mine.push(a.clone());
                    let kind = if self.role == GAME_PROVER { wire::ANSWER } else { GUESS };
                    let _ = ctx.send(GAME_VERIFIER, kind, wire::frame(0, i, &a));
                    if self.role == GAME_PROVER && self.prover == ProverKind::HonestSharing {
                        let _ = ctx.send(GAME_GUESSER, TALK, wire::frame(0, i, &a));
                    }
                }
                _ => {}
            }
        }
    }
}

/// Enforces the communication mode on the `P`-`Q` channel.
struct GamePolicy {
    mode: CommMode,
    /// `(window, sender) -> send time` for the simultaneous mode.
    sent: BTreeMap<(i128, PartyId), TimeStamp>,
}

impl SendPolicy for GamePolicy {
    fn permit(&mut self, msg: &SpacetimeMessage) -> Result<(), String> {
        let players = [GAME_PROVER, GAME_GUESSER];
        if !(players.contains(&msg.sender) && players.contains(&msg.receiver)) {
            return Ok(());
        }
        // window j opens when challenge j arrives
        let t = msg.t_send.value();
        if t < int(ROUND - 3) {
            return Err("no messages before the first challenge".into());
        }
        match self.mode {
            CommMode::None => Err("players may not communicate".into()),
            CommMode::Free => Ok(()),
            CommMode::SimultaneousOneRound => {
                let window = ((t + int(3)) / int(ROUND)).floor().to_integer();
                if self.sent.contains_key(&(window, msg.sender)) {
                    return Err(format!("second message from {} in round {window}", msg.sender));
                }
                let other = if msg.sender == GAME_PROVER { GAME_GUESSER } else { GAME_PROVER };
                if let Some(t_other) = self.sent.get(&(window, other)) {
                    if *t_other != msg.t_send {
                        return Err(format!("round {window} messages are not simultaneous"));
                    }
                }
                self.sent.insert((window, msg.sender), msg.t_send);
                Ok(())
            }
        }
    }
}

/// Plays one game. Returns the outcome and the full event log.
pub fn play_guessing_game(cfg: &GuessingGameConfig, seed: &Seed) -> Result<(GameTrial, EventLog), AdversaryError> {
    let protocol = cfg.protocol.clone();
    let rounds = protocol.rounds();
    let r = seed.derive("game/r", &[]);
    let public = protocol.publish(&r);
    let record = Rc::new(RefCell::new(Record::default()));
    let player = |role: PartyId, label: &str| Player {
        role,
        protocol: protocol.clone(),
        public: public.clone(),
        prover: cfg.prover,
        guesser: cfg.guesser,
        rng: seed.derive(label, &[]).rng(),
        challenges: Vec::new(),
        mine: Vec::new(),
        heard: BTreeMap::new(),
    };
    let mut sim = Simulator::new();
    let verifier = GameVerifier {
        protocol: protocol.clone(),
        r,
        record: record.clone(),
    };
    sim.add_party(GAME_VERIFIER, Position::from_int(0), Box::new(verifier))?;
    sim.add_party(GAME_PROVER, Position::from_int(-1), Box::new(player(GAME_PROVER, "game/prover")))?;
    sim.add_party(GAME_GUESSER, Position::from_int(1), Box::new(player(GAME_GUESSER, "game/guesser")))?;
    sim.set_policy(Box::new(GamePolicy {
        mode: cfg.comm_mode,
        sent: BTreeMap::new(),
    }));
    sim.run_until(TimeStamp::new(int(ROUND * rounds as i128)));
    if let Some(v) = sim.violations().first() {
        return Err(match v {
            SpacetimeError::PolicyViolation { reason, .. } => AdversaryError::CommModeViolation {
                mode: cfg.comm_mode.to_string(),
                detail: reason.clone(),
            },
            other => AdversaryError::Spacetime(other.clone()),
        });
    }
    let log = sim.into_log();
    let rec = record.borrow();
    let collect = |m: &BTreeMap<usize, Answer>| -> Vec<Answer> {
        (1..=rounds).map(|i| m.get(&i).cloned().unwrap_or_default()).collect()
    };
    let answers = collect(&rec.answers);
    let guesses = collect(&rec.guesses);
    let complete = rec.answers.len() == rounds && rec.guesses.len() == rounds && rec.challenges.len() == rounds;
    let accept = complete && protocol.verify(&rec.challenges, &answers, &r).accept;
    let matches = (1..=rounds)
        .filter(|i| matches!((rec.answers.get(i), rec.guesses.get(i)), (Some(a), Some(g)) if a == g))
        .count();
    let trial = GameTrial {
        seed: *seed,
        accept,
        win: accept && matches == rounds,
        matches,
        answers,
        guesses,
    };
    Ok((trial, log))
}

/// Plays `trials` independent games; trial `t` uses `seed.derive("game/trial", [t])`.
pub fn run_guessing_game(cfg: &GuessingGameConfig, trials: usize, seed: &Seed) -> Result<GameReport, AdversaryError> {
    let outcomes: Vec<GameTrial> = (0..trials)
        .into_par_iter()
        .map(|t| play_guessing_game(cfg, &seed.derive("game/trial", &[t as u64])).map(|(g, _)| g))
        .collect::<Result<_, _>>()?;
    let wins = outcomes.iter().filter(|g| g.win).count();
    let accepts = outcomes.iter().filter(|g| g.accept).count();
    let rounds = cfg.protocol.rounds().max(1);
    let matched: usize = outcomes.iter().map(|g| g.matches).sum();
    let n = trials.max(1) as f64;
    Ok(GameReport {
        comm_mode: cfg.comm_mode,
        trials,
        wins,
        accepts,
        win_rate: wins as f64 / n,
        accept_rate: accepts as f64 / n,
        round_match_rate: matched as f64 / (n * rounds as f64),
    })
}
