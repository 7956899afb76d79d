//! Seed material and counter-mode derivation.
//!
//! Every random choice in a simulation flows from a single [`Seed`]. Child
//! seeds are derived with SHA-256 over a domain label and a list of integer
//! indices, so the derivation tree is stable across processes and thread
//! counts.

use std::fmt;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SeedError {
    #[error("seed must be at most 64 hex characters, got {0}")]
    TooLong(usize),
    #[error("invalid hex in seed: {0}")]
    BadHex(String),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Seed(pub [u8; 32]);

impl Seed {
    pub const ZERO: Seed = Seed([0u8; 32]);

    pub fn from_u64(v: u64) -> Self {
        let mut b = [0u8; 32];
        b[..8].copy_from_slice(&v.to_le_bytes());
        Seed(b)
    }

    /// Parses up to 64 hex digits. Shorter inputs are left-padded with zeros,
    /// so `"ff"` and `"00ff"` name the same seed.
    pub fn from_hex(s: &str) -> Result<Self, SeedError> {
        let s = s.trim().trim_start_matches("0x");
        if s.len() > 64 {
            return Err(SeedError::TooLong(s.len()));
        }
        let padded = format!("{:0>64}", s);
        let bytes = hex::decode(&padded).map_err(|e| SeedError::BadHex(e.to_string()))?;
        let mut out = [0u8; 32];
        out.copy_from_slice(&bytes);
        Ok(Seed(out))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Child seed for `(label, index)`. Distinct labels give disjoint domains.
    pub fn derive(&self, label: &str, index: &[u64]) -> Seed {
        let mut h = Sha256::new();
        h.update(b"cvpv/derive/v1");
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
        h.update(self.0);
        h.update((index.len() as u64).to_le_bytes());
        for i in index {
            h.update(i.to_le_bytes());
        }
        Seed(h.finalize().into())
    }

    pub fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::from_seed(self.0)
    }

    /// `len` pseudorandom bytes in counter mode under this seed.
    pub fn expand(&self, label: &str, len: usize) -> Vec<u8> {
        crate::oracle::prf_expand(label, &[&self.0], len)
    }

    /// Uniform draw from `[0, 1)` with 53 bits of precision.
    pub fn unit_f64(&self, label: &str) -> f64 {
        let b = self.expand(label, 8);
        let v = u64::from_le_bytes(b.try_into().expect("8 bytes"));
        (v >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl fmt::Debug for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Seed({})", self.to_hex())
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Seed {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Seed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Seed::from_hex(&s).map_err(serde::de::Error::custom)
    }
}
