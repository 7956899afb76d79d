use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::QsimError;
use crate::bits::BitString;
use crate::oracle::prf_expand;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    X(usize),
    Rz(usize, f64),
    Ry(usize, f64),
    Cz(usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::X(q) | Gate::Rz(q, _) | Gate::Ry(q, _) => vec![q],
            Gate::Cz(a, b) => vec![a, b],
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::X(q) => write!(f, "x {q}"),
            Gate::Rz(q, a) => write!(f, "rz {q} {a:?}"),
            Gate::Ry(q, a) => write!(f, "ry {q} {a:?}"),
            Gate::Cz(a, b) => write!(f, "cz {a} {b}"),
        }
    }
}

impl FromStr for Gate {
    type Err = QsimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || QsimError::Parse(s.to_string());
        let mut it = s.split_whitespace();
        let kind = it.next().ok_or_else(bad)?;
        let q0: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let gate = match kind {
            "x" => Gate::X(q0),
            "rz" | "ry" => {
                let a: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                if kind == "rz" {
                    Gate::Rz(q0, a)
                } else {
                    Gate::Ry(q0, a)
                }
            }
            "cz" => Gate::Cz(q0, it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        if it.next().is_some() {
            return Err(bad());
        }
        Ok(gate)
    }
}

/// Brickwork ansatz parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzConfig {
    pub n_qubits: usize,
    pub depth: usize,
    /// Minimum challenge length accepted as a circuit seed.
    pub seed_bits: usize,
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        AnsatzConfig {
            n_qubits: 8,
            depth: 12,
            seed_bits: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub depth: usize,
    pub gates: Vec<Gate>,
    pub seed: BitString,
}

impl Circuit {
    pub fn identity(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            depth: 0,
            gates: Vec::new(),
            seed: BitString::zeros(0),
        }
    }

    pub fn push(&mut self, g: Gate) -> Result<(), QsimError> {
        for q in g.qubits() {
            if q >= self.n_qubits {
                return Err(QsimError::QubitOutOfRange {
                    qubit: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        if let Gate::Cz(a, b) = g {
            if a == b {
                return Err(QsimError::Parse(format!("cz on a single qubit {a}")));
            }
        }
        self.gates.push(g);
        Ok(())
    }

    /// One gate per line: `kind q0 [q1] [angle]`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(n_qubits: usize, text: &str) -> Result<Self, QsimError> {
        let mut c = Circuit::identity(n_qubits);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            c.push(line.parse()?)?;
        }
        Ok(c)
    }
}

fn unit_from(bytes: &[u8]) -> f64 {
    let v = u64::from_le_bytes(bytes.try_into().expect("8 bytes"));
    (v >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Deterministic brickwork circuit seeded by `ch`.
///
/// Each of the `depth` layers is one full brick: two half-layers, each an
/// independent Haar-random rotation `Rz(a) Ry(b) Rz(c)` on every qubit
/// followed by CZ on the pairs `(q, q+1)`, first with `q` even, then odd.
/// Angles are expanded from `ch` with the oracle PRF.
pub fn build_circuit(ch: &BitString, ansatz: &AnsatzConfig) -> Result<Circuit, QsimError> {
    if ch.len() < ansatz.seed_bits {
        return Err(QsimError::SeedTooShort {
            needed: ansatz.seed_bits,
            got: ch.len(),
        });
    }
    let n = ansatz.n_qubits;
    let draws = 6 * n * ansatz.depth;
    let stream = prf_expand(
        "qsim/ansatz",
        &[
            &(n as u64).to_le_bytes(),
            &(ansatz.depth as u64).to_le_bytes(),
            &(ch.len() as u64).to_le_bytes(),
            ch.as_bytes(),
        ],
        draws * 8,
    );
    let mut units = stream.chunks_exact(8).map(unit_from);
    let mut c = Circuit {
        n_qubits: n,
        depth: ansatz.depth,
        gates: Vec::with_capacity(draws + n * ansatz.depth),
        seed: ch.clone(),
    };
    for _ in 0..ansatz.depth {
        for parity in 0..2 {
            for q in 0..n {
                let a = 2.0 * PI * units.next().expect("enough draws");
                // cos(b) uniform on [-1, 1] gives the Haar polar angle
                let b = libm::acos(1.0 - 2.0 * units.next().expect("enough draws"));
                let cc = 2.0 * PI * units.next().expect("enough draws");
                c.gates.push(Gate::Rz(q, cc));
                c.gates.push(Gate::Ry(q, b));
                c.gates.push(Gate::Rz(q, a));
            }
            let mut q = parity;
            while q + 1 < n {
                c.gates.push(Gate::Cz(q, q + 1));
                q += 2;
            }
        }
    }
    Ok(c)
}
