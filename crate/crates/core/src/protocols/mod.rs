//! Two-party commitment protocols as explicit phase machines.
//!
//! Two schemes are modelled:
//!
//! * the Kent-style scheme ([`KentSession`]): every photon carries a BB84
//!   state `Ψ(x_i, z_i)` together with a classical sub-commitment
//!   `y_i = f_{x_i z_i}(w_i)`; Bob tests a random sample, Alice announces
//!   `x_i ⊕ b` on the rest and later unveils;
//! * the single-basis BB84 scheme ([`Bb84Session`]): all photons share the
//!   basis selected by `b`, and opening reveals `b` and every `z_i`.
//!
//! Alice is pluggable through [`KentCommitter`] / [`Bb84Committer`]. A
//! strategy owns its private data and the quantum system behind each photon;
//! Bob touches only the [`BOB_REGISTER`] qubit of that system and the
//! classical messages. Every run is logged to a [`Transcript`].

mod bb84;
mod bob;
mod kent;
mod transcript;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::oneway::{InversionAudit, OneWayError, PermutationFamily, MAX_WIDTH};
use crate::qstate::{QStateError, StateVector};
use crate::SimRng;

pub use bb84::{bb84_commit_protocol, Bb84Committer, Bb84Run, Bb84Session, HonestBb84Alice};
pub use bob::{Bob, BobMode};
pub use kent::{family_for, HonestKentAlice, KentSession, Phase, OpenOutcome, TestOutcome};
pub use transcript::{Event, ProtocolKind, Transcript, TranscriptHeader, TranscriptViolation, TRANSCRIPT_SCHEMA};

/// Name of the one-qubit register that travels to Bob.
pub const BOB_REGISTER: &str = "r_bz";

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    State(#[from] QStateError),
    #[error(transparent)]
    OneWay(#[from] OneWayError),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("phase {requested} requested while in phase {current}")]
    OutOfOrder { requested: &'static str, current: &'static str },
    #[error("strategy misbehaved: {0}")]
    Strategy(String),
    #[error("malformed transcript: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ProtocolError {
    /// Errors that count as a protocol violation by the strategy that raised
    /// them, rather than as a fault of the simulator.
    pub fn is_violation(&self) -> bool {
        matches!(self, ProtocolError::OneWay(_) | ProtocolError::Strategy(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Alice,
    Bob,
}

/// Size parameters of a Kent-style run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KentParams {
    /// `N_B`: photons sent.
    pub total_photons: usize,
    /// `N`: photons left after Bob's test sample is removed.
    pub retained_photons: usize,
    /// `n`: width of each classical sub-commitment.
    pub commitment_width: usize,
    /// Seeds the run's generator; the commitment family is drawn from it.
    pub seed: u64,
}

impl KentParams {
    pub fn new(total_photons: usize, retained_photons: usize, commitment_width: usize, seed: u64) -> Result<Self, ProtocolError> {
        let p = Self { total_photons, retained_photons, commitment_width, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(0 < self.retained_photons && self.retained_photons < self.total_photons) {
            return Err(ProtocolError::Params(format!(
                "retained_photons must satisfy 0 < N < N_B (got N = {}, N_B = {})",
                self.retained_photons, self.total_photons
            )));
        }
        if !(1..=MAX_WIDTH).contains(&self.commitment_width) {
            return Err(ProtocolError::Params(format!(
                "commitment_width must be in 1..={MAX_WIDTH} (got {})",
                self.commitment_width
            )));
        }
        Ok(())
    }

    pub fn sample_size(&self) -> usize {
        self.total_photons - self.retained_photons
    }
}

/// Alice's reveal of one sub-commitment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Unveiling {
    pub x: bool,
    pub z: bool,
    pub w: BitString,
}

/// What an Alice strategy hands back to the session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AliceMessage {
    Commitment { y: BitString },
    Unveiling(Unveiling),
    Mask { bit: bool },
    Bb84Open { bit: bool, values: BitString },
}

impl AliceMessage {
    fn kind(&self) -> &'static str {
        match self {
            AliceMessage::Commitment { .. } => "commitment",
            AliceMessage::Unveiling(_) => "unveiling",
            AliceMessage::Mask { .. } => "mask",
            AliceMessage::Bb84Open { .. } => "bb84_open",
        }
    }
}

/// A per-photon quantum system whose [`BOB_REGISTER`] qubit is in Bob's
/// hands. Alice's strategy may keep further registers in the same state.
pub trait PhotonCarrier {
    fn state(&self) -> &StateVector;
    fn state_mut(&mut self) -> &mut StateVector;
}

/// A photon with nothing attached on Alice's side.
#[derive(Debug, Clone, PartialEq)]
pub struct Photon(pub StateVector);

impl PhotonCarrier for Photon {
    fn state(&self) -> &StateVector {
        &self.0
    }

    fn state_mut(&mut self) -> &mut StateVector {
        &mut self.0
    }
}

/// Resources a session lends to Alice for one call.
pub struct AliceContext<'a> {
    pub family: &'a PermutationFamily,
    pub audit: &'a mut InversionAudit,
    pub rng: &'a mut SimRng,
}

/// Alice's side of the Kent-style scheme.
pub trait KentCommitter {
    type System: PhotonCarrier;

    /// Sub-commitment `y_i` and the photon for index `i`.
    fn commit(&mut self, index: usize, ctx: &mut AliceContext<'_>) -> Result<(AliceMessage, Self::System), ProtocolError>;

    /// Unveiling for a photon Bob chose to test.
    fn unveil(&mut self, index: usize, system: &mut Self::System, ctx: &mut AliceContext<'_>) -> Result<AliceMessage, ProtocolError>;

    /// Masked basis bit for a retained photon, given the bit Alice means to commit.
    fn announce_mask(&mut self, index: usize, bit: bool, ctx: &mut AliceContext<'_>) -> Result<AliceMessage, ProtocolError>;

    /// Open-phase unveiling for a retained photon when Alice claims `claim`;
    /// `mask` is what she announced for it.
    fn open(
        &mut self,
        index: usize,
        claim: bool,
        mask: bool,
        system: &mut Self::System,
        ctx: &mut AliceContext<'_>,
    ) -> Result<AliceMessage, ProtocolError>;
}
