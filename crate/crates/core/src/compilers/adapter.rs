use std::sync::Arc;

use rand::RngCore;

use super::{wire, Compiler, CompilerConfig, CompilerError};
use crate::bits::BitString;
use crate::crcore::{Answer, CrError, CrProtocol, CrTranscript};
use crate::oracle::{Oracle, OracleKey};
use crate::seed::Seed;

/// A compiled position-verification protocol seen as a single-prover
/// protocol: one party plays both verifiers, so timing drops out.
///
/// Round `i`'s challenge is `x_i || s_i || y_i`; the answer is the pair
/// `(ans_i, ans'_i)` the two verifiers would have received. The verifier
/// randomness `r` is the compiled protocol's trial seed, so with the same
/// seed and prover randomness the adapter replays a direct run exactly.
#[derive(Debug, Clone)]
pub struct CvpvAsCr {
    compiler: Compiler,
}

pub fn cvpv_to_cr(cfg: &CompilerConfig, inner: Arc<dyn CrProtocol>) -> Result<CvpvAsCr, CompilerError> {
    let compiler = Compiler::new(cfg.clone(), inner)?;
    if compiler.schedule().blocks != 1 {
        return Err(CompilerError::ConfigInvalid(
            "the adapter covers a single block; use blocks = 1".into(),
        ));
    }
    Ok(CvpvAsCr { compiler })
}

struct Public {
    oracle: Oracle,
    inner: Vec<u8>,
}

impl CvpvAsCr {
    pub fn compiler(&self) -> &Compiler {
        &self.compiler
    }

    fn inner(&self) -> &dyn CrProtocol {
        self.compiler.protocol().as_ref()
    }

    fn m(&self) -> usize {
        self.compiler.config().oracle_input_bits
    }

    fn n(&self) -> usize {
        self.inner().challenge_bits()
    }

    fn split(&self, ch: &BitString) -> (BitString, BitString, BitString) {
        let (m, n) = (self.m(), self.n());
        (ch.slice(0, m), ch.slice(m, n), ch.slice(m + n, m))
    }

    fn decode_public(&self, public: &[u8]) -> Option<Public> {
        let kb = self.compiler.config().oracle_key_bits / 8;
        if public.len() < 32 + kb {
            return None;
        }
        let seed = Seed(public[..32].try_into().ok()?);
        let key = OracleKey(public[32..32 + kb].to_vec());
        let oracle = Oracle::new(self.compiler.oracle_params(), seed, key).ok()?;
        Some(Public {
            oracle,
            inner: public[32 + kb..].to_vec(),
        })
    }

    fn inner_challenge(&self, oracle: &Oracle, ch: &BitString) -> BitString {
        let (x, s, y) = self.split(ch);
        let pad = oracle.evaluate(&x.xor(&y).expect("equal halves")).expect("oracle input length");
        pad.xor(&s).expect("oracle output length")
    }

    fn firsts(answers: &[Answer]) -> Vec<Answer> {
        answers
            .iter()
            .map(|a| wire::decode_pair(a).map(|p| p.0).unwrap_or_default())
            .collect()
    }
}

impl CrProtocol for CvpvAsCr {
    fn name(&self) -> String {
        format!("cvpv-as-cr({}, {})", self.compiler.config().mode.as_str(), self.inner().name())
    }

    fn rounds(&self) -> usize {
        self.compiler.config().rounds
    }

    fn adaptive(&self) -> bool {
        self.inner().adaptive()
    }

    fn challenge_bits(&self) -> usize {
        2 * self.m() + self.n()
    }

    /// Oracle seed, oracle key, then the backend's own public parameters.
    fn publish(&self, r: &Seed) -> Vec<u8> {
        let setup = self.compiler.setup(r);
        let mut v = setup.oracle_seed.0.to_vec();
        v.extend_from_slice(&setup.key.0);
        v.extend(self.inner().publish(&setup.block_seeds[0]));
        v
    }

    fn gen(&self, i: usize, prior: &[Answer], r: &Seed) -> Result<BitString, CrError> {
        let setup = self.compiler.setup(r);
        let ch = self.inner().gen(i, &Self::firsts(prior), &setup.block_seeds[0])?;
        let oracle = self
            .compiler
            .oracle(&setup)
            .map_err(|e| CrError::Config(e.to_string()))?;
        let (x, y) = (&setup.x[0][i - 1], &setup.y[0][i - 1]);
        let s = oracle
            .evaluate(&x.xor(y).expect("equal shares"))
            .map_err(|e| CrError::Config(e.to_string()))?
            .xor(&ch)
            .expect("oracle output matches challenge length");
        Ok(x.concat(&s).concat(y))
    }

    fn prove(
        &self,
        i: usize,
        public: &[u8],
        challenges: &[BitString],
        prior: &[Answer],
        rng: &mut dyn RngCore,
    ) -> Answer {
        let Some(p) = self.decode_public(public) else {
            return Vec::new();
        };
        let inner_chs: Vec<BitString> = challenges.iter().map(|c| self.inner_challenge(&p.oracle, c)).collect();
        let ans = self.inner().prove(i, &p.inner, &inner_chs, &Self::firsts(prior), rng);
        wire::encode_pair(&ans, &ans)
    }

    fn guess(&self, rng: &mut dyn RngCore) -> Answer {
        let g = self.inner().guess(rng);
        wire::encode_pair(&g, &g)
    }

    fn most_likely(&self, public: &[u8], ch: &BitString) -> Option<Answer> {
        let p = self.decode_public(public)?;
        let a = self.inner().most_likely(&p.inner, &self.inner_challenge(&p.oracle, ch))?;
        Some(wire::encode_pair(&a, &a))
    }

    /// Pair consistency on every round, then the backend verifier.
    fn verify(&self, challenges: &[BitString], answers: &[Answer], r: &Seed) -> CrTranscript {
        let setup = self.compiler.setup(r);
        let Ok(oracle) = self.compiler.oracle(&setup) else {
            return CrTranscript::rejected(Vec::new(), "bad oracle parameters".into());
        };
        for (idx, a) in answers.iter().enumerate() {
            match wire::decode_pair(a) {
                Some((a0, a1)) if a0 == a1 => {}
                _ => {
                    return CrTranscript::rejected(Vec::new(), format!("round {}: inconsistent answer pair", idx + 1));
                }
            }
        }
        let inner_chs: Vec<BitString> = challenges.iter().map(|c| self.inner_challenge(&oracle, c)).collect();
        self.inner()
            .verify(&inner_chs, &Self::firsts(answers), &setup.block_seeds[0])
    }
}
