//! Simulation testbed for compiling certified-randomness protocols into
//! classically-verifiable position verification.
//!
//! Parties live on a line and exchange messages at unit speed
//! ([`spacetime`]). Verifiers split each challenge through a keyed random
//! oracle ([`oracle`]) so that only a prover at the claimed position can
//! reassemble it in time, and the answer is checked by a certified-randomness
//! backend ([`crcore`]) built on a small statevector simulator ([`qsim`]).
//! [`compilers`] runs the four compiled protocols, [`adversaries`] supplies
//! attacks and the guessing games, and [`entropy`] evaluates the accompanying
//! bounds.

pub mod adversaries;
pub mod bits;
pub mod compilers;
pub mod crcore;
pub mod entropy;
pub mod oracle;
pub mod qsim;
pub mod seed;
pub mod spacetime;

pub use adversaries::{strategy, Strategy, StrategyKind, StrategyParams};
pub use bits::BitString;
pub use compilers::{Compiler, CompilerConfig, Geometry, Mode, RejectReason, RunOutput, Verdict};
pub use crcore::{mock_backend, CrProtocol, RcsBackendConfig, RcsProtocol};
pub use seed::Seed;
pub use spacetime::{EventLog, Position, Rational, TimeStamp};
