//! Exact small-scale simulator for quantum bit commitment.
//!
//! The crate implements honest two-party commitment protocols (a BB84-style
//! scheme where every photon shares one basis, and a scheme where each photon
//! is additionally bound by a classical sub-commitment), the purification
//! attacks that let a committer open either bit, and the linear algebra that
//! drives those attacks: Schmidt decomposition, Uhlmann-optimal unitaries and
//! minimum-error state discrimination.
//!
//! Modules, bottom-up:
//!
//! * [`qstate`]: dense state vectors, density matrices, unitaries, measurement.
//! * [`analysis`]: Schmidt decomposition, cheating unitaries, discrimination.
//! * [`oneway`]: toy permutation families standing in for one-way permutations.
//! * [`protocols`]: honest protocol state machines and transcripts.
//! * [`attacks`]: the cheating strategies.
//! * [`harness`]: seeded experiment campaigns, exact concealment probes, reports.

pub mod analysis;
pub mod attacks;
pub mod bits;
pub mod harness;
pub mod oneway;
pub mod protocols;
pub mod qstate;
pub mod random;

pub use bits::BitString;

/// Deterministic generator used for every simulated run.
pub type SimRng = rand_chacha::ChaCha8Rng;
