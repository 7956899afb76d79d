//! Keyed hash family `G_k : {0,1}^m -> {0,1}^n` shared by every party.
//!
//! The default mode is a pseudorandom function built from SHA-256 in counter
//! mode over `(seed, k, z)`. A lazily-sampled table mode is available for
//! tests that want a "truly random" function; its outputs depend on the
//! order in which fresh inputs are first queried.
//!
//! Every query is logged with the querying party and its local time.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::seed::Seed;
use crate::spacetime::{PartyId, TimeStamp};

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("party {0} is not registered with the oracle")]
    UnknownParty(PartyId),
    #[error("invalid oracle parameters: {0}")]
    BadParams(String),
}

/// SHA-256 counter-mode expansion of `(domain, parts...)` to `len` bytes.
pub fn prf_expand(domain: &str, parts: &[&[u8]], len: usize) -> Vec<u8> {
    let mut base = Sha256::new();
    base.update(b"cvpv/prf/v1");
    base.update((domain.len() as u64).to_le_bytes());
    base.update(domain.as_bytes());
    for p in parts {
        base.update((p.len() as u64).to_le_bytes());
        base.update(p);
    }
    let mut out = Vec::with_capacity(len + 32);
    let mut ctr = 0u64;
    while out.len() < len {
        let mut h = base.clone();
        h.update(ctr.to_le_bytes());
        out.extend_from_slice(&h.finalize());
        ctr += 1;
    }
    out.truncate(len);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleParams {
    /// Input length `m` in bits. Should be at least `2 * key_bits`; the
    /// defaults satisfy this, small values are allowed for exhaustive tests.
    pub input_bits: usize,
    /// Output length `n` in bits.
    pub output_bits: usize,
    /// Key length `λ` in bits; must be a multiple of 8.
    pub key_bits: usize,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams {
            input_bits: 128,
            output_bits: 256,
            key_bits: 64,
        }
    }
}

impl OracleParams {
    pub fn validate(&self) -> Result<(), OracleError> {
        if self.key_bits == 0 || !self.key_bits.is_multiple_of(8) {
            return Err(OracleError::BadParams(format!(
                "key_bits must be a positive multiple of 8, got {}",
                self.key_bits
            )));
        }
        if self.input_bits == 0 {
            return Err(OracleError::BadParams("input_bits must be positive".into()));
        }
        if self.output_bits == 0 {
            return Err(OracleError::BadParams("output_bits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct OracleKey(pub Vec<u8>);

impl OracleKey {
    /// Samples a key of `key_bits / 8` bytes from `seed`.
    pub fn derive(seed: &Seed, key_bits: usize) -> Self {
        OracleKey(seed.expand("oracle/key", key_bits / 8))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleMode {
    Prf,
    LazyRandom,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryRecord {
    pub party: PartyId,
    pub input: BitString,
    /// `None` for queries made during setup.
    pub time: Option<TimeStamp>,
}

#[derive(Debug)]
pub struct Oracle {
    params: OracleParams,
    seed: Seed,
    key: OracleKey,
    mode: OracleMode,
    table: RefCell<BTreeMap<BitString, BitString>>,
    lazy_rng: RefCell<ChaCha20Rng>,
    log: RefCell<Vec<QueryRecord>>,
    parties: RefCell<BTreeSet<PartyId>>,
}

impl Oracle {
    pub fn new(params: OracleParams, seed: Seed, key: OracleKey) -> Result<Self, OracleError> {
        params.validate()?;
        if key.0.len() * 8 != params.key_bits {
            return Err(OracleError::BadParams(format!(
                "key has {} bits, params say {}",
                key.0.len() * 8,
                params.key_bits
            )));
        }
        Ok(Oracle {
            params,
            seed,
            key,
            mode: OracleMode::Prf,
            table: RefCell::new(BTreeMap::new()),
            lazy_rng: RefCell::new(seed.derive("oracle/lazy", &[]).rng()),
            log: RefCell::new(Vec::new()),
            parties: RefCell::new(BTreeSet::new()),
        })
    }

    pub fn with_mode(mut self, mode: OracleMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn params(&self) -> &OracleParams {
        &self.params
    }

    pub fn key(&self) -> &OracleKey {
        &self.key
    }

    pub fn register(&self, party: PartyId) {
        self.parties.borrow_mut().insert(party);
    }

    fn check_input(&self, z: &BitString) -> Result<(), OracleError> {
        if z.len() != self.params.input_bits {
            return Err(OracleError::LengthMismatch {
                expected: self.params.input_bits,
                actual: z.len(),
            });
        }
        Ok(())
    }

    fn check_output(&self, v: &BitString) -> Result<(), OracleError> {
        if v.len() != self.params.output_bits {
            return Err(OracleError::LengthMismatch {
                expected: self.params.output_bits,
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// `G_k(z)` without logging. Used where no party is acting.
    pub fn evaluate(&self, z: &BitString) -> Result<BitString, OracleError> {
        self.check_input(z)?;
        let n = self.params.output_bits;
        match self.mode {
            OracleMode::Prf => {
                let bytes = prf_expand(
                    "oracle/G",
                    &[&self.seed.0, &self.key.0, z.as_bytes()],
                    n.div_ceil(8),
                );
                Ok(BitString::from_bytes(n, &bytes))
            }
            OracleMode::LazyRandom => {
                let mut table = self.table.borrow_mut();
                let out = table
                    .entry(z.clone())
                    .or_insert_with(|| BitString::random(n, &mut *self.lazy_rng.borrow_mut()));
                Ok(out.clone())
            }
        }
    }

    /// `G_k(z)` on behalf of `party`, recorded in the query log.
    pub fn query(
        &self,
        party: PartyId,
        z: &BitString,
        time: Option<TimeStamp>,
    ) -> Result<BitString, OracleError> {
        let out = self.evaluate(z)?;
        self.parties.borrow_mut().insert(party);
        self.log.borrow_mut().push(QueryRecord {
            party,
            input: z.clone(),
            time,
        });
        Ok(out)
    }

    /// `s = G_k(z) xor ch`.
    pub fn otp_encode(
        &self,
        party: PartyId,
        z: &BitString,
        ch: &BitString,
        time: Option<TimeStamp>,
    ) -> Result<BitString, OracleError> {
        self.check_output(ch)?;
        let pad = self.query(party, z, time)?;
        Ok(pad.xor(ch).expect("checked lengths"))
    }

    /// Inverse of [`otp_encode`](Self::otp_encode).
    pub fn otp_decode(
        &self,
        party: PartyId,
        z: &BitString,
        s: &BitString,
        time: Option<TimeStamp>,
    ) -> Result<BitString, OracleError> {
        self.otp_encode(party, z, s, time)
    }

    pub fn query_log(
        &self,
        party: PartyId,
    ) -> Result<Vec<(BitString, Option<TimeStamp>)>, OracleError> {
        if !self.parties.borrow().contains(&party) {
            return Err(OracleError::UnknownParty(party));
        }
        let mut v: Vec<_> = self
            .log
            .borrow()
            .iter()
            .filter(|r| r.party == party)
            .map(|r| (r.input.clone(), r.time))
            .collect();
        // setup-time queries (None) sort first
        v.sort_by_key(|a| a.1);
        Ok(v)
    }

    /// Every query so far, in the order made.
    pub fn records(&self) -> Vec<QueryRecord> {
        self.log.borrow().clone()
    }

    pub fn total_queries(&self) -> usize {
        self.log.borrow().len()
    }
}
