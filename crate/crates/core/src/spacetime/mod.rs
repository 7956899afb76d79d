//! Deterministic discrete-event simulation of parties on a line.
//!
//! Messages travel at unit speed: a message sent from `x` at time `t`
//! reaches `x'` at exactly `t + |x - x'|`. Deliveries are ordered by
//! `(t_arrive, receiver, sender, seq)`. All deliveries (and wake-ups) for
//! one receiver at one instant are handed to its handler in a single
//! activation, so a prover waiting on two shares sees them together.

mod exact;
mod log;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

pub use exact::{
    int, parse_rational, rat, rational_from_f64, serde_rational, to_f64, ExactRepr,
    ParseRationalError, Position, Rational, TimeStamp,
};
pub use log::{Event, EventId, EventLog, LightConeViolation, SpacetimeMessage};

use num_traits::Zero;

pub type PartyId = u32;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum SpacetimeError {
    #[error("party {party} tried to send at {t_send} but its clock is at {now}")]
    CausalityViolation {
        party: PartyId,
        t_send: TimeStamp,
        now: TimeStamp,
    },
    #[error("party {0} cannot act at setup time")]
    NoClock(PartyId),
    #[error("unknown party {0}")]
    UnknownParty(PartyId),
    #[error("party {0} registered twice")]
    DuplicateParty(PartyId),
    #[error("unknown event {0:?}")]
    UnknownEvent(EventId),
    #[error("send from {sender} to {receiver} refused by channel policy: {reason}")]
    PolicyViolation {
        sender: PartyId,
        receiver: PartyId,
        reason: String,
    },
}

/// A participant. Handlers only ever see messages that have already arrived.
pub trait Party {
    /// Runs once at setup, before any clock exists. Parties may schedule
    /// wake-ups and future sends here.
    fn on_start(&mut self, _ctx: &mut Context<'_>) {}

    /// Runs with every message arriving at this instant (possibly none, when
    /// woken by a timer).
    fn on_activate(&mut self, ctx: &mut Context<'_>, inbox: &[Event]);
}

/// Gatekeeper consulted on every send; used to model forbidden channels.
pub trait SendPolicy {
    fn permit(&mut self, msg: &SpacetimeMessage) -> Result<(), String>;
}

struct Outgoing {
    receiver: PartyId,
    kind: String,
    payload: Vec<u8>,
    t_send: TimeStamp,
}

/// Handle given to a party during `on_start` / `on_activate`.
pub struct Context<'a> {
    me: PartyId,
    now: Option<TimeStamp>,
    compute_delay: Rational,
    positions: &'a BTreeMap<PartyId, Position>,
    outbox: Vec<Outgoing>,
    wakes: Vec<TimeStamp>,
    errors: Vec<SpacetimeError>,
}

impl<'a> Context<'a> {
    pub fn me(&self) -> PartyId {
        self.me
    }

    /// Current time, or `None` during setup.
    pub fn now(&self) -> Option<TimeStamp> {
        self.now
    }

    pub fn position(&self) -> Position {
        self.positions[&self.me]
    }

    pub fn position_of(&self, id: PartyId) -> Result<Position, SpacetimeError> {
        self.positions
            .get(&id)
            .copied()
            .ok_or(SpacetimeError::UnknownParty(id))
    }

    /// Arrival time of a message sent now (after compute delay) to `to`.
    pub fn arrival_if_sent_now(&self, to: PartyId) -> Result<TimeStamp, SpacetimeError> {
        let now = self.now.ok_or(SpacetimeError::NoClock(self.me))?;
        let d = self.position().distance(&self.position_of(to)?);
        Ok(now.plus(self.compute_delay + d))
    }

    fn earliest_send(&self) -> Option<TimeStamp> {
        self.now.map(|n| n.plus(self.compute_delay))
    }

    /// Sends immediately (plus this party's compute delay).
    pub fn send(
        &mut self,
        to: PartyId,
        kind: &str,
        payload: Vec<u8>,
    ) -> Result<TimeStamp, SpacetimeError> {
        let t = self
            .earliest_send()
            .ok_or(SpacetimeError::NoClock(self.me))?;
        self.send_at(t, to, kind, payload)
    }

    /// Sends at a chosen time, which must not lie in this party's past.
    pub fn send_at(
        &mut self,
        t_send: TimeStamp,
        to: PartyId,
        kind: &str,
        payload: Vec<u8>,
    ) -> Result<TimeStamp, SpacetimeError> {
        if let Some(earliest) = self.earliest_send() {
            if t_send < earliest {
                let e = SpacetimeError::CausalityViolation {
                    party: self.me,
                    t_send,
                    now: earliest,
                };
                self.errors.push(e.clone());
                return Err(e);
            }
        }
        let d = self.position().distance(&self.position_of(to)?);
        self.outbox.push(Outgoing {
            receiver: to,
            kind: kind.to_string(),
            payload,
            t_send,
        });
        Ok(t_send.plus(d))
    }

    pub fn wake_at(&mut self, t: TimeStamp) -> Result<(), SpacetimeError> {
        if let Some(now) = self.now {
            if t < now {
                let e = SpacetimeError::CausalityViolation {
                    party: self.me,
                    t_send: t,
                    now,
                };
                self.errors.push(e.clone());
                return Err(e);
            }
        }
        self.wakes.push(t);
        Ok(())
    }
}

enum Item {
    Deliver {
        msg: SpacetimeMessage,
        known_prefix: usize,
    },
    Wake,
}

struct Pending {
    t: TimeStamp,
    receiver: PartyId,
    sender: PartyId,
    seq: u64,
    item: Item,
}

impl Pending {
    fn key(&self) -> (TimeStamp, PartyId, PartyId, u64) {
        (self.t, self.receiver, self.sender, self.seq)
    }
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

struct Slot {
    party: Option<Box<dyn Party>>,
    compute_delay: Rational,
    clock: Option<TimeStamp>,
}

/// Single-threaded event loop. One instance per trial.
pub struct Simulator {
    positions: BTreeMap<PartyId, Position>,
    slots: BTreeMap<PartyId, Slot>,
    queue: BinaryHeap<Reverse<Pending>>,
    next_seq: u64,
    log: EventLog,
    started: bool,
    violations: Vec<SpacetimeError>,
    policy: Option<Box<dyn SendPolicy>>,
}

impl Default for Simulator {
    fn default() -> Self {
        Self::new()
    }
}

impl Simulator {
    pub fn new() -> Self {
        Simulator {
            positions: BTreeMap::new(),
            slots: BTreeMap::new(),
            queue: BinaryHeap::new(),
            next_seq: 0,
            log: EventLog::default(),
            started: false,
            violations: Vec::new(),
            policy: None,
        }
    }

    pub fn add_party(
        &mut self,
        id: PartyId,
        position: Position,
        party: Box<dyn Party>,
    ) -> Result<(), SpacetimeError> {
        if self.slots.contains_key(&id) {
            return Err(SpacetimeError::DuplicateParty(id));
        }
        self.positions.insert(id, position);
        self.slots.insert(
            id,
            Slot {
                party: Some(party),
                compute_delay: Rational::zero(),
                clock: None,
            },
        );
        Ok(())
    }

    /// Time between a party's activation and its `send`s. Defaults to zero.
    pub fn set_compute_delay(&mut self, id: PartyId, delay: Rational) -> Result<(), SpacetimeError> {
        self.slots
            .get_mut(&id)
            .ok_or(SpacetimeError::UnknownParty(id))?
            .compute_delay = delay;
        Ok(())
    }

    pub fn set_policy(&mut self, policy: Box<dyn SendPolicy>) {
        self.policy = Some(policy);
    }

    pub fn position(&self, id: PartyId) -> Option<Position> {
        self.positions.get(&id).copied()
    }

    /// Injects a message from outside any handler. Returns the arrival time.
    pub fn schedule(
        &mut self,
        sender: PartyId,
        receiver: PartyId,
        kind: &str,
        payload: Vec<u8>,
        t_send: TimeStamp,
    ) -> Result<TimeStamp, SpacetimeError> {
        let slot = self
            .slots
            .get(&sender)
            .ok_or(SpacetimeError::UnknownParty(sender))?;
        if let Some(now) = slot.clock {
            if t_send < now {
                return Err(SpacetimeError::CausalityViolation {
                    party: sender,
                    t_send,
                    now,
                });
            }
        }
        let prefix = self.log.received_count(sender);
        self.enqueue(sender, receiver, kind.to_string(), payload, t_send, prefix)
    }

    fn enqueue(
        &mut self,
        sender: PartyId,
        receiver: PartyId,
        kind: String,
        payload: Vec<u8>,
        t_send: TimeStamp,
        known_prefix: usize,
    ) -> Result<TimeStamp, SpacetimeError> {
        let from = *self
            .positions
            .get(&sender)
            .ok_or(SpacetimeError::UnknownParty(sender))?;
        let to = *self
            .positions
            .get(&receiver)
            .ok_or(SpacetimeError::UnknownParty(receiver))?;
        let msg = SpacetimeMessage {
            sender,
            receiver,
            kind,
            payload,
            t_send,
            t_arrive: t_send.plus(from.distance(&to)),
        };
        if let Some(policy) = self.policy.as_mut() {
            if let Err(reason) = policy.permit(&msg) {
                let e = SpacetimeError::PolicyViolation {
                    sender,
                    receiver,
                    reason,
                };
                self.violations.push(e.clone());
                return Err(e);
            }
        }
        let t_arrive = msg.t_arrive;
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(Pending {
            t: t_arrive,
            receiver,
            sender,
            seq,
            item: Item::Deliver { msg, known_prefix },
        }));
        Ok(t_arrive)
    }

    fn push_wake(&mut self, party: PartyId, t: TimeStamp) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(Pending {
            t,
            receiver: party,
            sender: party,
            seq,
            item: Item::Wake,
        }));
    }

    fn activate(&mut self, id: PartyId, now: Option<TimeStamp>, inbox: &[Event]) {
        let Some(slot) = self.slots.get_mut(&id) else {
            return;
        };
        let mut party = slot.party.take().expect("party re-entered");
        if now.is_some() {
            slot.clock = now;
        }
        let mut ctx = Context {
            me: id,
            now,
            compute_delay: slot.compute_delay,
            positions: &self.positions,
            outbox: Vec::new(),
            wakes: Vec::new(),
            errors: Vec::new(),
        };
        if now.is_none() {
            party.on_start(&mut ctx);
        } else {
            party.on_activate(&mut ctx, inbox);
        }
        let Context {
            outbox,
            wakes,
            errors,
            ..
        } = ctx;
        self.slots.get_mut(&id).expect("slot").party = Some(party);
        self.violations.extend(errors);
        let prefix = self.log.received_count(id);
        for out in outbox {
            // policy refusals are recorded in `violations`
            let _ = self.enqueue(id, out.receiver, out.kind, out.payload, out.t_send, prefix);
        }
        for t in wakes {
            self.push_wake(id, t);
        }
    }

    fn start(&mut self) {
        if self.started {
            return;
        }
        self.started = true;
        let ids: Vec<PartyId> = self.slots.keys().copied().collect();
        for id in ids {
            self.activate(id, None, &[]);
        }
    }

    /// Delivers everything with arrival time `<= t_end` and returns the log.
    pub fn run_until(&mut self, t_end: TimeStamp) -> &EventLog {
        self.start();
        while let Some(Reverse(head)) = self.queue.peek() {
            if head.t > t_end {
                break;
            }
            let (t, receiver) = (head.t, head.receiver);
            let mut inbox = Vec::new();
            while let Some(Reverse(p)) = self.queue.peek() {
                if p.t != t || p.receiver != receiver {
                    break;
                }
                let Reverse(p) = self.queue.pop().expect("peeked");
                if let Item::Deliver { msg, known_prefix } = p.item {
                    let ev = Event {
                        id: EventId(0),
                        seq: p.seq,
                        sender_position: self.positions[&msg.sender],
                        receiver_position: self.positions[&msg.receiver],
                        msg,
                        known_prefix,
                    };
                    let id = self.log.push(ev);
                    inbox.push(self.log.events()[id.0].clone());
                }
            }
            self.activate(receiver, Some(t), &inbox);
        }
        &self.log
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn into_log(self) -> EventLog {
        self.log
    }

    /// Causality and policy errors raised by handlers so far.
    pub fn violations(&self) -> &[SpacetimeError] {
        &self.violations
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }
}
