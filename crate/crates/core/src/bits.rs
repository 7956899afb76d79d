//! Fixed-length bit strings.
//!
//! Bits are stored MSB-first inside each byte; trailing padding bits of the
//! last byte are always zero so byte equality coincides with bit equality.

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BitsError {
    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid hex: {0}")]
    BadHex(String),
    #[error("bits set past the declared length {0}")]
    StrayBits(usize),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitString {
    len: usize,
    bytes: Vec<u8>,
}

fn byte_len(bits: usize) -> usize {
    bits.div_ceil(8)
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            len,
            bytes: vec![0; byte_len(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = BitString {
            len,
            bytes: vec![0xff; byte_len(len)],
        };
        b.mask_tail();
        b
    }

    /// Builds from raw bytes, truncating or zero-extending to `len` bits.
    pub fn from_bytes(len: usize, bytes: &[u8]) -> Self {
        let mut v = bytes.to_vec();
        v.resize(byte_len(len), 0);
        let mut b = BitString { len, bytes: v };
        b.mask_tail();
        b
    }

    /// Exact-length variant of [`from_bytes`](Self::from_bytes); padding
    /// bits in the last byte must be zero.
    pub fn try_from_bytes(len: usize, bytes: &[u8]) -> Result<Self, BitsError> {
        if bytes.len() != byte_len(len) {
            return Err(BitsError::LengthMismatch {
                expected: len,
                actual: bytes.len() * 8,
            });
        }
        let b = Self::from_bytes(len, bytes);
        if b.bytes != bytes {
            return Err(BitsError::StrayBits(len));
        }
        Ok(b)
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut b = BitString::zeros(bits.len());
        for (i, &v) in bits.iter().enumerate() {
            b.set(i, v);
        }
        b
    }

    pub fn random(len: usize, rng: &mut dyn RngCore) -> Self {
        let mut v = vec![0u8; byte_len(len)];
        rng.fill_bytes(&mut v);
        Self::from_bytes(len, &v)
    }

    pub fn from_hex(len: usize, s: &str) -> Result<Self, BitsError> {
        let v = hex::decode(s).map_err(|e| BitsError::BadHex(e.to_string()))?;
        Self::try_from_bytes(len, &v)
    }

    fn mask_tail(&mut self) {
        let rem = self.len % 8;
        if rem != 0 {
            if let Some(last) = self.bytes.last_mut() {
                *last &= 0xffu8 << (8 - rem);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.bytes[i / 8] >> (7 - i % 8) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u8 << (7 - i % 8);
        if v {
            self.bytes[i / 8] |= mask;
        } else {
            self.bytes[i / 8] &= !mask;
        }
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString, BitsError> {
        if self.len != other.len {
            return Err(BitsError::LengthMismatch {
                expected: self.len,
                actual: other.len,
            });
        }
        Ok(BitString {
            len: self.len,
            bytes: self
                .bytes
                .iter()
                .zip(&other.bytes)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = BitString::zeros(self.len + other.len);
        for i in 0..self.len {
            out.set(i, self.get(i));
        }
        for i in 0..other.len {
            out.set(self.len + i, other.get(i));
        }
        out
    }

    pub fn slice(&self, start: usize, len: usize) -> BitString {
        assert!(start + len <= self.len);
        let mut out = BitString::zeros(len);
        for i in 0..len {
            out.set(i, self.get(start + i));
        }
        out
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    pub fn to_binary(&self) -> String {
        (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}:{})", self.len, self.to_hex())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tail_bits_are_masked() {
        let b = BitString::ones(10);
        assert_eq!(b.as_bytes(), &[0xff, 0xc0]);
        assert_eq!(b.count_ones(), 10);
        assert_eq!(BitString::from_bytes(3, &[0xff]).as_bytes(), &[0xe0]);
    }

    #[test]
    fn xor_length_mismatch() {
        let e = BitString::zeros(8).xor(&BitString::zeros(9)).unwrap_err();
        assert_eq!(e, BitsError::LengthMismatch { expected: 8, actual: 9 });
    }

    #[test]
    fn binary_rendering_is_msb_first() {
        let b = BitString::from_bits(&[true, false, false]);
        assert_eq!(b.to_binary(), "100");
    }

    proptest! {
        #[test]
        fn concat_then_slice_recovers_parts(a in proptest::collection::vec(any::<bool>(), 0..40),
                                            b in proptest::collection::vec(any::<bool>(), 0..40)) {
            let x = BitString::from_bits(&a);
            let y = BitString::from_bits(&b);
            let c = x.concat(&y);
            prop_assert_eq!(c.slice(0, a.len()), x);
            prop_assert_eq!(c.slice(a.len(), b.len()), y);
        }

        #[test]
        fn xor_is_an_involution(bytes in proptest::collection::vec(any::<u8>(), 1..20),
                                mask in proptest::collection::vec(any::<u8>(), 1..20)) {
            let n = bytes.len().min(mask.len()) * 8 - 3;
            let x = BitString::from_bytes(n, &bytes);
            let m = BitString::from_bytes(n, &mask);
            prop_assert_eq!(x.xor(&m).unwrap().xor(&m).unwrap(), x);
        }
    }
}
