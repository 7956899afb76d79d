//! Shared inputs for the criterion benches.

use std::sync::Arc;

use cvpv_core::bits::BitString;
use cvpv_core::crcore::{CrProtocol, RcsBackendConfig, RcsProtocol};
use cvpv_core::qsim::{build_circuit, AnsatzConfig, Circuit};
use cvpv_core::seed::Seed;

/// Circuit for a fixed pseudo-random challenge.
pub fn circuit(n_qubits: usize, depth: usize) -> Circuit {
    let ansatz = AnsatzConfig { n_qubits, depth, seed_bits: 128 };
    let bits = Seed::ZERO.derive("bench/challenge", &[n_qubits as u64]).expand("bits", 16);
    build_circuit(&BitString::from_bytes(128, &bits), &ansatz).expect("valid ansatz")
}

pub fn rcs(n_qubits: usize, k: usize, rounds: usize) -> Arc<dyn CrProtocol> {
    let cfg = RcsBackendConfig {
        n_qubits,
        depth: 12,
        k,
        gamma: 1.0,
        ..RcsBackendConfig::default()
    };
    Arc::new(RcsProtocol::new(cfg, rounds).expect("valid backend"))
}
