use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::exact::{Position, Rational, TimeStamp};
use super::{PartyId, SpacetimeError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EventId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpacetimeMessage {
    pub sender: PartyId,
    pub receiver: PartyId,
    pub kind: String,
    pub payload: Vec<u8>,
    pub t_send: TimeStamp,
    pub t_arrive: TimeStamp,
}

/// A delivered message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub id: EventId,
    pub seq: u64,
    pub msg: SpacetimeMessage,
    pub sender_position: Position,
    pub receiver_position: Position,
    /// Number of events the sender had received when it sent this message.
    /// Everything in that prefix is a potential input to the payload.
    pub known_prefix: usize,
}

impl Event {
    pub fn payload_hash(&self) -> String {
        hex::encode(Sha256::digest(&self.msg.payload))
    }
}

#[derive(Serialize)]
struct JsonLine<'a> {
    t: f64,
    sender: PartyId,
    receiver: PartyId,
    kind: &'a str,
    payload_hash: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LightConeViolation {
    /// `t_arrive - t_send` differs from the sender-receiver distance.
    Latency { event: EventId },
    /// An ancestor was emitted outside the event's past light cone.
    Ancestor { event: EventId, ancestor: EventId },
    /// A message was sent before one of its declared inputs arrived.
    SentBeforeInput { event: EventId, input: EventId },
}

/// Ordered record of deliveries, plus each party's receive history.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventLog {
    events: Vec<Event>,
    received: BTreeMap<PartyId, Vec<EventId>>,
}

impl EventLog {
    pub(crate) fn push(&mut self, mut ev: Event) -> EventId {
        let id = EventId(self.events.len());
        ev.id = id;
        self.received.entry(ev.msg.receiver).or_default().push(id);
        self.events.push(ev);
        id
    }

    pub(crate) fn received_count(&self, party: PartyId) -> usize {
        self.received.get(&party).map_or(0, Vec::len)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn get(&self, id: EventId) -> Result<&Event, SpacetimeError> {
        self.events.get(id.0).ok_or(SpacetimeError::UnknownEvent(id))
    }

    /// The events `sender` could have read when it emitted `id`.
    pub fn direct_inputs(&self, id: EventId) -> Result<&[EventId], SpacetimeError> {
        let ev = self.get(id)?;
        Ok(self
            .received
            .get(&ev.msg.sender)
            .map_or(&[][..], |v| &v[..ev.known_prefix]))
    }

    /// All earlier events whose payloads could have influenced `id`.
    pub fn causal_ancestry(&self, id: EventId) -> Result<BTreeSet<EventId>, SpacetimeError> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<EventId> = self.direct_inputs(id)?.to_vec();
        while let Some(e) = stack.pop() {
            if out.insert(e) {
                stack.extend_from_slice(self.direct_inputs(e)?);
            }
        }
        Ok(out)
    }

    /// Checks every event and every ancestor against the light cone.
    pub fn light_cone_violations(&self) -> Vec<LightConeViolation> {
        let mut out = Vec::new();
        // ancestors[i] is built from inputs with smaller ids
        let mut ancestors: Vec<BTreeSet<usize>> = Vec::with_capacity(self.events.len());
        for ev in &self.events {
            let dist = ev.sender_position.distance(&ev.receiver_position);
            if ev.msg.t_arrive.0 - ev.msg.t_send.0 != dist {
                out.push(LightConeViolation::Latency { event: ev.id });
            }
            let inputs = self.direct_inputs(ev.id).unwrap_or(&[]);
            let mut anc = BTreeSet::new();
            for inp in inputs {
                if self.events[inp.0].msg.t_arrive > ev.msg.t_send {
                    out.push(LightConeViolation::SentBeforeInput {
                        event: ev.id,
                        input: *inp,
                    });
                }
                anc.insert(inp.0);
                if let Some(a) = ancestors.get(inp.0) {
                    anc.extend(a.iter().copied());
                }
            }
            for &a in &anc {
                let src = &self.events[a];
                let gap: Rational = ev.msg.t_arrive.0 - src.msg.t_send.0;
                if gap < ev.receiver_position.distance(&src.sender_position) {
                    out.push(LightConeViolation::Ancestor {
                        event: ev.id,
                        ancestor: src.id,
                    });
                }
            }
            ancestors.push(anc);
        }
        out
    }

    /// `(earliest send, latest arrival)` over the whole log.
    pub fn span(&self) -> Option<(TimeStamp, TimeStamp)> {
        let first = self.events.iter().map(|e| e.msg.t_send).min()?;
        let last = self.events.iter().map(|e| e.msg.t_arrive).max()?;
        Some((first, last))
    }

    /// One JSON object per line: `{t, sender, receiver, kind, payload_hash}`.
    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for ev in &self.events {
            let line = JsonLine {
                t: ev.msg.t_arrive.to_f64(),
                sender: ev.msg.sender,
                receiver: ev.msg.receiver,
                kind: &ev.msg.kind,
                payload_hash: ev.payload_hash(),
            };
            s.push_str(&serde_json::to_string(&line).expect("event serializes"));
            s.push('\n');
        }
        s
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }
}
