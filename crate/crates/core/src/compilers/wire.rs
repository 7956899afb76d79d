//! Message kinds and payload framing shared by verifiers and provers.
//!
//! Every protocol payload starts with an 8-byte header: block and round as
//! little-endian `u32`s. The round is 1-based, the block 0-based.

use crate::bits::BitString;
use crate::crcore::Answer;

pub const SHARE0: &str = "share0";
pub const SHARE1: &str = "share1";
pub const ANSWER: &str = "answer";
pub const FWD_SHARE0: &str = "fwd-share0";
pub const FWD_SHARE1: &str = "fwd-share1";
pub const PEER_ANSWER: &str = "peer-answer";

pub fn frame(block: usize, round: usize, body: &[u8]) -> Vec<u8> {
    let mut v = Vec::with_capacity(8 + body.len());
    v.extend_from_slice(&(block as u32).to_le_bytes());
    v.extend_from_slice(&(round as u32).to_le_bytes());
    v.extend_from_slice(body);
    v
}

pub fn unframe(payload: &[u8]) -> Option<(usize, usize, &[u8])> {
    if payload.len() < 8 {
        return None;
    }
    let block = u32::from_le_bytes(payload[0..4].try_into().ok()?) as usize;
    let round = u32::from_le_bytes(payload[4..8].try_into().ok()?) as usize;
    Some((block, round, &payload[8..]))
}

/// `x || s` as sent by `V_0`.
pub fn encode_first(x: &BitString, s: &BitString) -> Vec<u8> {
    let mut v = x.as_bytes().to_vec();
    v.extend_from_slice(s.as_bytes());
    v
}

pub fn decode_first(body: &[u8], input_bits: usize, output_bits: usize) -> Option<(BitString, BitString)> {
    let xb = input_bits.div_ceil(8);
    if body.len() != xb + output_bits.div_ceil(8) {
        return None;
    }
    let x = BitString::try_from_bytes(input_bits, &body[..xb]).ok()?;
    let s = BitString::try_from_bytes(output_bits, &body[xb..]).ok()?;
    Some((x, s))
}

pub fn decode_second(body: &[u8], input_bits: usize) -> Option<BitString> {
    BitString::try_from_bytes(input_bits, body).ok()
}

/// Length-prefixed pair `(ans, ans')`.
pub fn encode_pair(a: &Answer, b: &Answer) -> Vec<u8> {
    let mut v = Vec::with_capacity(4 + a.len() + b.len());
    v.extend_from_slice(&(a.len() as u32).to_le_bytes());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

pub fn decode_pair(bytes: &[u8]) -> Option<(Answer, Answer)> {
    if bytes.len() < 4 {
        return None;
    }
    let n = u32::from_le_bytes(bytes[..4].try_into().ok()?) as usize;
    let rest = &bytes[4..];
    if n > rest.len() {
        return None;
    }
    Some((rest[..n].to_vec(), rest[n..].to_vec()))
}
