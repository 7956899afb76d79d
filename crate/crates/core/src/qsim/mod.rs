//! Dense statevector simulation for small random circuits, output sampling
//! and cross-entropy (heavy output) scoring.
//!
//! Qubit 0 is the most significant bit of a basis index, so flipping qubit 0
//! of `|000>` gives `|100>`. Output probabilities follow the convention
//! `p_C(z) = |<z|C|0^n>|^2`, shared by the honest sampler and the verifier.
//!
//! Trigonometry goes through `libm`, so amplitudes are bit-identical across
//! build profiles and platforms.

mod circuit;

use num_complex::Complex64;
use rand::Rng;
use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use circuit::{build_circuit, AnsatzConfig, Circuit, Gate};

use crate::bits::BitString;

pub const MAX_QUBITS: usize = 14;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum QsimError {
    #[error("challenge has {got} bits but the ansatz needs at least {needed}")]
    SeedTooShort { needed: usize, got: usize },
    #[error("{n_qubits} qubits exceeds the simulator limit of {max}")]
    TooManyQubits { n_qubits: usize, max: usize },
    #[error("qubit {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("samples are over {samples} qubits, circuit has {circuit}")]
    DimensionMismatch { samples: usize, circuit: usize },
    #[error("cannot parse {0:?}")]
    Parse(String),
    #[error("malformed sample encoding: {0}")]
    Encoding(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero_state(n_qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector { n_qubits, amps }
    }

    /// Random normalized state with Gaussian amplitudes.
    pub fn random(n_qubits: usize, rng: &mut dyn RngCore) -> Self {
        let mut gauss = || {
            // Box-Muller
            let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
            let u2: f64 = rng.gen();
            (-2.0 * libm::log(u1)).sqrt() * libm::cos(2.0 * std::f64::consts::PI * u2)
        };
        let mut amps: Vec<Complex64> = (0..1usize << n_qubits)
            .map(|_| Complex64::new(gauss(), gauss()))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        StateVector { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, z: usize) -> Complex64 {
        self.amps[z]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn mask(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    pub fn apply(&mut self, g: &Gate) {
        match *g {
            Gate::X(q) => {
                let m = self.mask(q);
                for i in 0..self.amps.len() {
                    if i & m == 0 {
                        self.amps.swap(i, i | m);
                    }
                }
            }
            Gate::Rz(q, theta) => {
                let m = self.mask(q);
                let (s, c) = libm::sincos(theta / 2.0);
                let lo = Complex64::new(c, -s);
                let hi = Complex64::new(c, s);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    *a *= if i & m == 0 { lo } else { hi };
                }
            }
            Gate::Ry(q, theta) => {
                let m = self.mask(q);
                let (s, c) = libm::sincos(theta / 2.0);
                for i in 0..self.amps.len() {
                    if i & m == 0 {
                        let a0 = self.amps[i];
                        let a1 = self.amps[i | m];
                        self.amps[i] = a0 * c - a1 * s;
                        self.amps[i | m] = a0 * s + a1 * c;
                    }
                }
            }
            Gate::Cz(a, b) => {
                let m = self.mask(a) | self.mask(b);
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    if i & m == m {
                        *amp = -*amp;
                    }
                }
            }
        }
    }

    pub fn apply_circuit(&mut self, c: &Circuit) -> Result<(), QsimError> {
        if c.n_qubits != self.n_qubits {
            return Err(QsimError::DimensionMismatch {
                samples: self.n_qubits,
                circuit: c.n_qubits,
            });
        }
        for g in &c.gates {
            self.apply(g);
        }
        Ok(())
    }
}

/// `C|0^n>` for circuits up to [`MAX_QUBITS`].
pub fn simulate(c: &Circuit) -> Result<StateVector, QsimError> {
    simulate_with_limit(c, MAX_QUBITS)
}

pub fn simulate_with_limit(c: &Circuit, max_qubits: usize) -> Result<StateVector, QsimError> {
    if c.n_qubits > max_qubits {
        return Err(QsimError::TooManyQubits {
            n_qubits: c.n_qubits,
            max: max_qubits,
        });
    }
    let mut sv = StateVector::zero_state(c.n_qubits);
    sv.apply_circuit(c)?;
    Ok(sv)
}

/// Bitstrings drawn from a circuit's output distribution, as basis indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    pub n_qubits: usize,
    pub samples: Vec<u32>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn bitstrings(&self) -> Vec<BitString> {
        self.samples
            .iter()
            .map(|&z| {
                let bits: Vec<bool> = (0..self.n_qubits)
                    .map(|q| z >> (self.n_qubits - 1 - q) & 1 == 1)
                    .collect();
                BitString::from_bits(&bits)
            })
            .collect()
    }

    /// Two big-endian bytes per sample.
    pub fn encode(&self) -> Vec<u8> {
        self.samples
            .iter()
            .flat_map(|&z| (z as u16).to_be_bytes())
            .collect()
    }

    pub fn decode(n_qubits: usize, bytes: &[u8]) -> Result<SampleSet, QsimError> {
        if !bytes.len().is_multiple_of(2) {
            return Err(QsimError::Encoding(format!("odd length {}", bytes.len())));
        }
        let limit = 1u32 << n_qubits;
        let samples = bytes
            .chunks_exact(2)
            .map(|c| {
                let z = u16::from_be_bytes([c[0], c[1]]) as u32;
                if z >= limit {
                    Err(QsimError::Encoding(format!("sample {z} out of range for {n_qubits} qubits")))
                } else {
                    Ok(z)
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(SampleSet { n_qubits, samples })
    }
}

/// `k` i.i.d. draws from `|<z|psi>|^2`.
pub fn sample(sv: &StateVector, k: usize, rng: &mut dyn RngCore) -> SampleSet {
    let mut cdf = Vec::with_capacity(sv.amps.len());
    let mut acc = 0.0;
    for a in &sv.amps {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let total = acc;
    let last = cdf.len() - 1;
    let samples = (0..k)
        .map(|_| {
            let u = rng.gen::<f64>() * total;
            // first index whose cumulative weight exceeds u
            cdf.partition_point(|&c| c <= u).min(last) as u32
        })
        .collect();
    SampleSet {
        n_qubits: sv.n_qubits,
        samples,
    }
}

/// Mean of `probs[z]` over the samples.
pub fn mean_probability(probs: &[f64], samples: &SampleSet) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let sum: f64 = samples.samples.iter().map(|&z| probs[z as usize]).sum();
    sum / samples.len() as f64
}

/// `(1/k) sum_j p_C(z_j)` with `p_C` from exact simulation.
pub fn xhog_score(c: &Circuit, samples: &SampleSet) -> Result<f64, QsimError> {
    if samples.n_qubits != c.n_qubits {
        return Err(QsimError::DimensionMismatch {
            samples: samples.n_qubits,
            circuit: c.n_qubits,
        });
    }
    let probs = simulate(c)?.probabilities();
    Ok(mean_probability(&probs, samples))
}

/// `N * sum_z p(z)^2`, the ideal-sampler score in units of `1/N`.
pub fn collision_number(probs: &[f64]) -> f64 {
    probs.len() as f64 * probs.iter().map(|p| p * p).sum::<f64>()
}
