use rand::{Rng, SeedableRng};

use super::{
    AliceContext, AliceMessage, Bob, BobMode, Event, KentCommitter, KentParams, Party, Photon, PhotonCarrier, ProtocolError,
    Transcript, Unveiling, BOB_REGISTER,
};
use crate::bits::BitString;
use crate::oneway::{InversionAudit, PermutationFamily};
use crate::qstate::{bb84_state, Basis, DensityMatrix};
use crate::SimRng;

/// Where a session is in its phase machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Commit,
    Test,
    Mask,
    Open,
    Closed,
    Aborted,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Commit => "commit",
            Phase::Test => "test",
            Phase::Mask => "mask",
            Phase::Open => "open",
            Phase::Closed => "closed",
            Phase::Aborted => "aborted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TestOutcome {
    Passed,
    AliceCaught { index: usize, reason: String },
    Aborted { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpenOutcome {
    Accepted { bit: bool },
    Rejected { index: Option<usize>, reason: String },
    Aborted { reason: String },
}

impl OpenOutcome {
    pub fn accepted_bit(&self) -> Option<bool> {
        match self {
            OpenOutcome::Accepted { bit } => Some(*bit),
            _ => None,
        }
    }
}

/// The commitment family a session with these parameters uses: its seed is
/// the first draw of the run's generator.
pub fn family_for(params: &KentParams) -> Result<PermutationFamily, ProtocolError> {
    let mut rng = SimRng::seed_from_u64(params.seed);
    Ok(PermutationFamily::generate(params.commitment_width, rng.random())?)
}

/// One Kent-style run between the strategy `A` and an honest [`Bob`].
///
/// Call [`commit_phase`](Self::commit_phase), [`test_phase`](Self::test_phase),
/// [`mask_phase`](Self::mask_phase) and [`open_phase`](Self::open_phase) in
/// that order. Inversions of the commitment family are refused until the open
/// phase starts.
pub struct KentSession<A: KentCommitter> {
    params: KentParams,
    family: PermutationFamily,
    alice: A,
    bob: Bob,
    audit: InversionAudit,
    transcript: Transcript,
    systems: Vec<A::System>,
    commitments: Vec<BitString>,
    retained: Vec<usize>,
    masks: Vec<bool>,
    phase: Phase,
    rng: SimRng,
}

impl<A: KentCommitter> KentSession<A> {
    pub fn new(params: KentParams, alice: A, bob_mode: BobMode) -> Result<Self, ProtocolError> {
        params.validate()?;
        let mut rng = SimRng::seed_from_u64(params.seed);
        let family = PermutationFamily::generate(params.commitment_width, rng.random())?;
        let transcript = Transcript::kent(&params, family.seed());
        Ok(Self {
            params,
            family,
            alice,
            bob: Bob::new(bob_mode),
            audit: InversionAudit::locked(),
            transcript,
            systems: Vec::with_capacity(params.total_photons),
            commitments: Vec::with_capacity(params.total_photons),
            retained: Vec::new(),
            masks: Vec::new(),
            phase: Phase::Commit,
            rng,
        })
    }

    pub fn params(&self) -> &KentParams {
        &self.params
    }

    pub fn family(&self) -> &PermutationFamily {
        &self.family
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

    pub fn audit(&self) -> &InversionAudit {
        &self.audit
    }

    pub fn alice(&self) -> &A {
        &self.alice
    }

    pub fn systems(&self) -> &[A::System] {
        &self.systems
    }

    /// Indices kept after the test sample (empty before the test phase).
    pub fn retained(&self) -> &[usize] {
        &self.retained
    }

    /// The run's generator, for callers that need further draws in sequence
    /// (e.g. a bit chosen between phases).
    pub fn rng_mut(&mut self) -> &mut SimRng {
        &mut self.rng
    }

    /// Bob's density matrix for photon `index`, tracing out Alice's side.
    pub fn bob_reduced_state(&self, index: usize) -> Result<DensityMatrix, ProtocolError> {
        let sys = self.systems.get(index).ok_or_else(|| ProtocolError::Params(format!("no photon {index}")))?;
        Ok(sys.state().partial_trace(&[BOB_REGISTER])?)
    }

    fn enter(&self, requested: Phase) -> Result<(), ProtocolError> {
        if self.phase != requested {
            return Err(ProtocolError::OutOfOrder { requested: requested.name(), current: self.phase.name() });
        }
        Ok(())
    }

    fn abort(&mut self, violator: Party, reason: String) -> String {
        log::debug!("run aborted by {violator:?}: {reason}");
        self.transcript.push(Event::Abort { violator, reason: reason.clone() });
        self.phase = Phase::Aborted;
        reason
    }

    /// Turns a strategy result into a value, or into an abort when the
    /// strategy broke the rules. Simulator faults propagate.
    fn screen_alice<T>(&mut self, r: Result<T, ProtocolError>) -> Result<Result<T, String>, ProtocolError> {
        match r {
            Ok(v) => Ok(Ok(v)),
            Err(e) if e.is_violation() => Ok(Err(self.abort(Party::Alice, e.to_string()))),
            Err(e) => Err(e),
        }
    }

    fn unexpected(&mut self, wanted: &str, got: &AliceMessage) -> String {
        self.abort(Party::Alice, format!("expected {wanted}, got {}", got.kind()))
    }

    /// Alice sends `N_B` photons with their sub-commitments. Returns `false`
    /// if the run aborted.
    pub fn commit_phase(&mut self) -> Result<bool, ProtocolError> {
        self.enter(Phase::Commit)?;
        for i in 0..self.params.total_photons {
            let mut ctx = AliceContext { family: &self.family, audit: &mut self.audit, rng: &mut self.rng };
            let r = self.alice.commit(i, &mut ctx);
            let Ok((msg, mut sys)) = self.screen_alice(r)? else { return Ok(false) };
            let y = match msg {
                AliceMessage::Commitment { y } if y.width() == self.params.commitment_width => y,
                other => {
                    self.unexpected("commitment", &other);
                    return Ok(false);
                }
            };
            if sys.state().layout().width_of(BOB_REGISTER).ok() != Some(1) {
                self.abort(Party::Alice, format!("photon {i} lacks a one-qubit {BOB_REGISTER} register"));
                return Ok(false);
            }
            self.transcript.push(Event::Commitment { index: i, y });
            self.bob.receive(i, sys.state_mut(), &mut self.rng)?;
            self.systems.push(sys);
            self.commitments.push(y);
        }
        self.phase = Phase::Test;
        Ok(true)
    }

    /// Checks the commitment equation and Bob's measurement for one unveiling.
    fn verify(&mut self, index: usize, u: &Unveiling) -> Result<Option<String>, ProtocolError> {
        match self.family.eval(u.x, u.z, &u.w) {
            Ok(y) if y == self.commitments[index] => {}
            Ok(_) => return Ok(Some(format!("photon {index}: f_xz(w) differs from the commitment"))),
            Err(e) => return Ok(Some(format!("photon {index}: {e}"))),
        }
        let basis = Basis::from_bit(u.x);
        self.bob.check_photon(index, self.systems[index].state_mut(), basis, u.z, &mut self.rng)
    }

    /// Bob samples `N_B − N` photons and Alice unveils each of them.
    pub fn test_phase(&mut self) -> Result<TestOutcome, ProtocolError> {
        self.enter(Phase::Test)?;
        let sample = self.bob.sample(self.params.total_photons, self.params.sample_size(), &mut self.rng);
        self.retained = (0..self.params.total_photons).filter(|i| sample.binary_search(i).is_err()).collect();
        self.transcript.push(Event::Sample { indices: sample.clone() });
        for &i in &sample {
            let mut ctx = AliceContext { family: &self.family, audit: &mut self.audit, rng: &mut self.rng };
            let r = self.alice.unveil(i, &mut self.systems[i], &mut ctx);
            let u = match self.screen_alice(r)? {
                Ok(AliceMessage::Unveiling(u)) => u,
                Ok(other) => return Ok(TestOutcome::Aborted { reason: self.unexpected("unveiling", &other) }),
                Err(reason) => return Ok(TestOutcome::Aborted { reason }),
            };
            self.transcript.push(Event::TestUnveil { index: i, x: u.x, z: u.z, w: u.w });
            let failure = self.verify(i, &u)?;
            self.transcript.push(Event::TestCheck { index: i, passed: failure.is_none(), reason: failure.clone() });
            if let Some(reason) = failure {
                self.transcript.push(Event::Verdict { accepted: false, bit: None, index: Some(i), reason: Some(reason.clone()) });
                self.phase = Phase::Closed;
                return Ok(TestOutcome::AliceCaught { index: i, reason });
            }
        }
        self.phase = Phase::Mask;
        Ok(TestOutcome::Passed)
    }

    /// Alice announces `x_i ⊕ b` for every retained photon. Returns `false`
    /// if the run aborted.
    pub fn mask_phase(&mut self, bit: bool) -> Result<bool, ProtocolError> {
        self.enter(Phase::Mask)?;
        for k in 0..self.retained.len() {
            let i = self.retained[k];
            let mut ctx = AliceContext { family: &self.family, audit: &mut self.audit, rng: &mut self.rng };
            let r = self.alice.announce_mask(i, bit, &mut ctx);
            match self.screen_alice(r)? {
                Ok(AliceMessage::Mask { bit: m }) => {
                    self.transcript.push(Event::Mask { index: i, bit: m });
                    self.masks.push(m);
                }
                Ok(other) => {
                    self.unexpected("mask", &other);
                    return Ok(false);
                }
                Err(_) => return Ok(false),
            }
        }
        self.phase = Phase::Open;
        Ok(true)
    }

    /// Alice unveils every retained photon as if she had committed `claim`;
    /// Bob verifies them and decodes the bit from the masks.
    pub fn open_phase(&mut self, claim: bool) -> Result<OpenOutcome, ProtocolError> {
        self.enter(Phase::Open)?;
        self.audit.unlock();
        let mut unveilings = Vec::with_capacity(self.retained.len());
        for k in 0..self.retained.len() {
            let (i, mask) = (self.retained[k], self.masks[k]);
            let mut ctx = AliceContext { family: &self.family, audit: &mut self.audit, rng: &mut self.rng };
            let r = self.alice.open(i, claim, mask, &mut self.systems[i], &mut ctx);
            let u = match self.screen_alice(r)? {
                Ok(AliceMessage::Unveiling(u)) => u,
                Ok(other) => return Ok(OpenOutcome::Aborted { reason: self.unexpected("unveiling", &other) }),
                Err(reason) => return Ok(OpenOutcome::Aborted { reason }),
            };
            self.transcript.push(Event::OpenUnveil { index: i, x: u.x, z: u.z, w: u.w });
            unveilings.push(u);
        }
        self.phase = Phase::Closed;
        let mut decoded = None;
        let opened: Vec<(usize, bool)> = self.retained.iter().copied().zip(self.masks.iter().copied()).collect();
        for ((i, mask), u) in opened.into_iter().zip(unveilings) {
            let failure = match self.verify(i, &u)? {
                Some(reason) => Some(reason),
                None => match decoded {
                    Some(b) if b != mask ^ u.x => Some(format!("photon {i}: masks do not decode to a single bit")),
                    _ => {
                        decoded = Some(mask ^ u.x);
                        None
                    }
                },
            };
            if let Some(reason) = failure {
                self.transcript.push(Event::Verdict { accepted: false, bit: None, index: Some(i), reason: Some(reason.clone()) });
                return Ok(OpenOutcome::Rejected { index: Some(i), reason });
            }
        }
        let bit = decoded.expect("at least one retained photon");
        self.transcript.push(Event::Verdict { accepted: true, bit: Some(bit), index: None, reason: None });
        Ok(OpenOutcome::Accepted { bit })
    }
}

/// Alice following the protocol: uniform `(x, z, w)` per photon, the photon
/// prepared in `Ψ(x, z)`.
///
/// At the open phase she unveils the basis `mask ⊕ claim`. When `claim` is
/// not the bit she masked with, that basis is the wrong one for every photon;
/// she then inverts the family to produce a consistent `w` (permitted once
/// the open phase starts) and keeps her `z`, so only Bob's photon
/// measurement can catch her.
#[derive(Debug, Clone, Default)]
pub struct HonestKentAlice {
    secrets: Vec<(Unveiling, BitString)>,
}

impl HonestKentAlice {
    pub fn new() -> Self {
        Self::default()
    }

    /// `(x, z, w)` and `y` for every committed photon.
    pub fn secrets(&self) -> &[(Unveiling, BitString)] {
        &self.secrets
    }

    fn secret(&self, index: usize) -> Result<&(Unveiling, BitString), ProtocolError> {
        self.secrets.get(index).ok_or_else(|| ProtocolError::Strategy(format!("no commitment for photon {index}")))
    }
}

impl KentCommitter for HonestKentAlice {
    type System = Photon;

    fn commit(&mut self, index: usize, ctx: &mut AliceContext<'_>) -> Result<(AliceMessage, Photon), ProtocolError> {
        debug_assert_eq!(index, self.secrets.len());
        let n = ctx.family.width();
        let x: bool = ctx.rng.random();
        let z: bool = ctx.rng.random();
        let w = BitString::new(ctx.rng.random_range(0..1u64 << n), n).expect("draw fits width");
        let y = ctx.family.eval(x, z, &w)?;
        self.secrets.push((Unveiling { x, z, w }, y));
        Ok((AliceMessage::Commitment { y }, Photon(bb84_state(BOB_REGISTER, x, z)?)))
    }

    fn unveil(&mut self, index: usize, _system: &mut Photon, _ctx: &mut AliceContext<'_>) -> Result<AliceMessage, ProtocolError> {
        Ok(AliceMessage::Unveiling(self.secret(index)?.0))
    }

    fn announce_mask(&mut self, index: usize, bit: bool, _ctx: &mut AliceContext<'_>) -> Result<AliceMessage, ProtocolError> {
        Ok(AliceMessage::Mask { bit: self.secret(index)?.0.x ^ bit })
    }

    fn open(
        &mut self,
        index: usize,
        claim: bool,
        mask: bool,
        _system: &mut Photon,
        ctx: &mut AliceContext<'_>,
    ) -> Result<AliceMessage, ProtocolError> {
        let (u, y) = *self.secret(index)?;
        let x = mask ^ claim;
        if x == u.x {
            return Ok(AliceMessage::Unveiling(u));
        }
        let w = ctx.family.invert_audited(ctx.audit, x, u.z, &y)?;
        Ok(AliceMessage::Unveiling(Unveiling { x, z: u.z, w }))
    }
}
