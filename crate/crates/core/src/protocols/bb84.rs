use rand::{Rng, SeedableRng};

use super::{AliceMessage, Bob, BobMode, Event, OpenOutcome, Party, Phase, Photon, PhotonCarrier, ProtocolError, Transcript, BOB_REGISTER};
use crate::bits::{BitString, MAX_WIDTH};
use crate::qstate::{bb84_state, Basis, DensityMatrix};
use crate::SimRng;

/// Alice's side of the single-basis BB84 scheme.
pub trait Bb84Committer {
    type System: PhotonCarrier;

    /// Photon `index` of the commit phase.
    fn prepare(&mut self, index: usize, rng: &mut SimRng) -> Result<Self::System, ProtocolError>;

    /// The opening message (`Bb84Open`) when Alice claims `claim`.
    fn open(&mut self, claim: bool, systems: &mut [Self::System], rng: &mut SimRng) -> Result<AliceMessage, ProtocolError>;
}

/// Sends `Ψ(b, z_i)` with uniform `z_i`, and at opening reports `z`
/// whatever bit she claims.
#[derive(Debug, Clone)]
pub struct HonestBb84Alice {
    bit: bool,
    values: Vec<bool>,
}

impl HonestBb84Alice {
    pub fn new(bit: bool) -> Self {
        Self { bit, values: Vec::new() }
    }
}

impl Bb84Committer for HonestBb84Alice {
    type System = Photon;

    fn prepare(&mut self, _index: usize, rng: &mut SimRng) -> Result<Photon, ProtocolError> {
        let z: bool = rng.random();
        self.values.push(z);
        Ok(Photon(bb84_state(BOB_REGISTER, self.bit, z)?))
    }

    fn open(&mut self, claim: bool, _systems: &mut [Photon], _rng: &mut SimRng) -> Result<AliceMessage, ProtocolError> {
        Ok(AliceMessage::Bb84Open { bit: claim, values: BitString::from_bits(&self.values) })
    }
}

/// One single-basis BB84 run: commit (photons only), then open.
pub struct Bb84Session<A: Bb84Committer> {
    photons: usize,
    alice: A,
    bob: Bob,
    systems: Vec<A::System>,
    transcript: Transcript,
    phase: Phase,
    rng: SimRng,
}

impl<A: Bb84Committer> Bb84Session<A> {
    pub fn new(photons: usize, alice: A, bob_mode: BobMode, seed: u64) -> Result<Self, ProtocolError> {
        if !(1..=MAX_WIDTH).contains(&photons) {
            return Err(ProtocolError::Params(format!("photon count must be in 1..={MAX_WIDTH} (got {photons})")));
        }
        Ok(Self {
            photons,
            alice,
            bob: Bob::new(bob_mode),
            systems: Vec::with_capacity(photons),
            transcript: Transcript::bb84(photons),
            phase: Phase::Commit,
            rng: SimRng::seed_from_u64(seed),
        })
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    pub fn systems(&self) -> &[A::System] {
        &self.systems
    }

    pub fn rng_mut(&mut self) -> &mut SimRng {
        &mut self.rng
    }

    pub fn bob_reduced_state(&self, index: usize) -> Result<DensityMatrix, ProtocolError> {
        let sys = self.systems.get(index).ok_or_else(|| ProtocolError::Params(format!("no photon {index}")))?;
        Ok(sys.state().partial_trace(&[BOB_REGISTER])?)
    }

    fn abort(&mut self, reason: String) -> String {
        self.transcript.push(Event::Abort { violator: Party::Alice, reason: reason.clone() });
        self.phase = Phase::Aborted;
        reason
    }

    /// Returns `false` if the run aborted.
    pub fn commit_phase(&mut self) -> Result<bool, ProtocolError> {
        if self.phase != Phase::Commit {
            return Err(ProtocolError::OutOfOrder { requested: Phase::Commit.name(), current: self.phase.name() });
        }
        for i in 0..self.photons {
            let mut sys = match self.alice.prepare(i, &mut self.rng) {
                Ok(s) => s,
                Err(e) if e.is_violation() => {
                    self.abort(e.to_string());
                    return Ok(false);
                }
                Err(e) => return Err(e),
            };
            if sys.state().layout().width_of(BOB_REGISTER).ok() != Some(1) {
                self.abort(format!("photon {i} lacks a one-qubit {BOB_REGISTER} register"));
                return Ok(false);
            }
            self.transcript.push(Event::Photon { index: i });
            self.bob.receive(i, sys.state_mut(), &mut self.rng)?;
            self.systems.push(sys);
        }
        self.phase = Phase::Open;
        Ok(true)
    }

    /// Alice reveals the basis bit and every `z_i`; Bob measures each photon
    /// in that basis.
    pub fn open_phase(&mut self, claim: bool) -> Result<OpenOutcome, ProtocolError> {
        if self.phase != Phase::Open {
            return Err(ProtocolError::OutOfOrder { requested: Phase::Open.name(), current: self.phase.name() });
        }
        let msg = match self.alice.open(claim, &mut self.systems, &mut self.rng) {
            Ok(m) => m,
            Err(e) if e.is_violation() => return Ok(OpenOutcome::Aborted { reason: self.abort(e.to_string()) }),
            Err(e) => return Err(e),
        };
        let (bit, values) = match msg {
            AliceMessage::Bb84Open { bit, values } if values.width() == self.photons => (bit, values),
            other => return Ok(OpenOutcome::Aborted { reason: self.abort(format!("expected bb84_open, got {}", other.kind())) }),
        };
        self.transcript.push(Event::Bb84Open { bit, values });
        self.phase = Phase::Closed;
        let basis = Basis::from_bit(bit);
        for i in 0..self.photons {
            if let Some(reason) = self.bob.check_photon(i, self.systems[i].state_mut(), basis, values.bit(i), &mut self.rng)? {
                self.transcript.push(Event::Verdict { accepted: false, bit: None, index: Some(i), reason: Some(reason.clone()) });
                return Ok(OpenOutcome::Rejected { index: Some(i), reason });
            }
        }
        self.transcript.push(Event::Verdict { accepted: true, bit: Some(bit), index: None, reason: None });
        Ok(OpenOutcome::Accepted { bit })
    }
}

/// Result of a complete BB84 run.
#[derive(Debug, Clone)]
pub struct Bb84Run {
    pub transcript: Transcript,
    pub outcome: OpenOutcome,
}

/// Commits with `alice`, then opens claiming `claim`.
pub fn bb84_commit_protocol<A: Bb84Committer>(
    alice: A,
    bob_mode: BobMode,
    photons: usize,
    claim: bool,
    seed: u64,
) -> Result<Bb84Run, ProtocolError> {
    let mut s = Bb84Session::new(photons, alice, bob_mode, seed)?;
    let outcome = if s.commit_phase()? {
        s.open_phase(claim)?
    } else {
        OpenOutcome::Aborted { reason: "aborted during commit".into() }
    };
    Ok(Bb84Run { transcript: s.into_transcript(), outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::trace_distance;

    #[test]
    fn honest_open_accepted() {
        for seed in 0..30 {
            for bit in [false, true] {
                for mode in [BobMode::Deferred, BobMode::Immediate] {
                    let run = bb84_commit_protocol(HonestBb84Alice::new(bit), mode, 6, bit, seed).unwrap();
                    assert_eq!(run.outcome, OpenOutcome::Accepted { bit });
                    assert!(run.transcript.is_complete());
                }
            }
        }
    }

    #[test]
    fn honest_alice_claiming_other_basis_usually_fails() {
        let accepted = (0..200)
            .filter(|&seed| {
                let run = bb84_commit_protocol(HonestBb84Alice::new(false), BobMode::Deferred, 6, true, seed).unwrap();
                run.outcome.accepted_bit().is_some()
            })
            .count();
        // 2^-6 per run
        assert!(accepted < 15, "accepted {accepted}/200");
    }

    #[test]
    fn bob_state_is_basis_independent() {
        let mut avg = Vec::new();
        for bit in [false, true] {
            let parts: Vec<DensityMatrix> = [false, true]
                .iter()
                .map(|&z| DensityMatrix::from_pure(&bb84_state(BOB_REGISTER, bit, z).unwrap()))
                .collect();
            avg.push(DensityMatrix::mixture(&[(0.5, &parts[0]), (0.5, &parts[1])]).unwrap());
        }
        assert!(trace_distance(&avg[0], &avg[1]).unwrap() < 1e-12);
    }

    #[test]
    fn out_of_order_open_refused() {
        let mut s = Bb84Session::new(3, HonestBb84Alice::new(true), BobMode::Deferred, 1).unwrap();
        assert!(matches!(s.open_phase(true), Err(ProtocolError::OutOfOrder { .. })));
        s.commit_phase().unwrap();
        assert!(matches!(s.commit_phase(), Err(ProtocolError::OutOfOrder { .. })));
    }
}
