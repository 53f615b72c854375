//! Cheating strategies against the commitment schemes in [`crate::protocols`].
//!
//! * [`GammaSystem`] / [`KentAttacker`]: Alice keeps every classical choice of
//!   the Kent-style scheme in quantum registers, so the commitment stays
//!   entangled with Bob's photon. She survives the test, erases `r_w` once the
//!   open phase allows inversion, and is left with a perfectly correlated pair
//!   she can open in either basis.
//! * [`EprAttacker`]: one half of a Bell pair per photon against the
//!   single-basis BB84 scheme.
//! * [`coherent_message_eval`]: compute a classical message reversibly and
//!   measure only the message bits.
//! * [`generic_attack`]: the purified-protocol attack: prepare the bit-0 state
//!   and move it towards the bit-1 state with a side-A unitary.

use rand::Rng;
use thiserror::Error;

use crate::analysis::{cheat_unitary, reduced_fidelity, side_a_overlap, uhlmann_unitary, AnalysisError};
use crate::bits::BitString;
use crate::oneway::{InversionAudit, OneWayError, PermutationFamily};
use crate::protocols::{
    AliceContext, AliceMessage, Bb84Committer, KentCommitter, PhotonCarrier, ProtocolError, Unveiling, BOB_REGISTER,
};
use crate::qstate::{
    c, trace_distance, Basis, Bipartition, DensityMatrix, QStateError, RegisterMap, StateVector, UnitaryOp, SPECTRAL_TOL,
};
use crate::SimRng;

pub const R_W: &str = "r_w";
pub const R_F: &str = "r_f";
pub const R_AZ: &str = "r_az";
pub const R_BZ: &str = BOB_REGISTER;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error(transparent)]
    State(#[from] QStateError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    OneWay(#[from] OneWayError),
    #[error("{operation} needs phase {needed:?}, system is in phase {actual:?}")]
    WrongPhase { operation: &'static str, needed: GammaPhase, actual: GammaPhase },
    #[error("invalid attack input: {0}")]
    Invalid(String),
}

impl From<AttackError> for ProtocolError {
    fn from(e: AttackError) -> Self {
        match e {
            AttackError::State(e) => ProtocolError::State(e),
            AttackError::OneWay(e) => ProtocolError::OneWay(e),
            other => ProtocolError::Strategy(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaPhase {
    Prepared,
    Committed,
    Tested,
    Erased,
    Opened,
}

/// Applies the basis change of `basis` to every qubit of `name`.
fn rotate_register(s: &StateVector, name: &str, basis: Basis) -> Result<StateVector, QStateError> {
    if basis == Basis::Rectilinear {
        return Ok(s.clone());
    }
    let h = UnitaryOp::hadamard();
    let mut out = s.clone();
    for q in s.layout().qubits_of(name)? {
        out = out.apply_on_qubits(h.matrix(), &[q])?;
    }
    Ok(out)
}

/// One photon's worth of the Kent attack: registers `r_w` (n), `r_f` (n),
/// `r_az` (1) and Bob's `r_bz` (1), in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSystem {
    state: StateVector,
    theta: Basis,
    y: Option<BitString>,
    phase: GammaPhase,
    width: usize,
}

impl PhotonCarrier for GammaSystem {
    fn state(&self) -> &StateVector {
        &self.state
    }

    fn state_mut(&mut self) -> &mut StateVector {
        &mut self.state
    }
}

/// `(1/√2^{n+1}) Σ_w Σ_z |w⟩|f_{θz}(w)⟩|z⟩_θ|z⟩_θ`.
///
/// Built from `|0…0⟩` by Hadamards on `r_w` and `r_az`, a copy of `r_az`
/// into `r_bz`, the reversible evaluation `|w⟩|v⟩|z⟩ ↦ |w⟩|v ⊕ f_{θz}(w)⟩|z⟩`,
/// and finally the basis change of `θ` on `r_az` and `r_bz`.
pub fn prepare_gamma(fam: &PermutationFamily, theta: Basis) -> Result<GammaSystem, AttackError> {
    let n = fam.width();
    let layout = RegisterMap::new(&[(R_W, n), (R_F, n), (R_AZ, 1), (R_BZ, 1)])?;
    let mut s = StateVector::zeros(layout);
    s = rotate_register(&s, R_W, Basis::Diagonal)?;
    s = rotate_register(&s, R_AZ, Basis::Diagonal)?;
    s = s.apply_permutation(&[0, 1, 3, 2], &[R_AZ, R_BZ])?;
    let x = theta.bit();
    let size = 1usize << n;
    let mut perm = vec![0usize; size * size * 2];
    for w in 0..size {
        for v in 0..size {
            for z in 0..2 {
                let f = fam.table(x, z == 1)[w] as usize;
                perm[(w * size + v) * 2 + z] = (w * size + (v ^ f)) * 2 + z;
            }
        }
    }
    s = s.apply_permutation(&perm, &[R_W, R_F, R_AZ])?;
    s = rotate_register(&s, R_AZ, theta)?;
    s = rotate_register(&s, R_BZ, theta)?;
    Ok(GammaSystem { state: s, theta, y: None, phase: GammaPhase::Prepared, width: n })
}

impl GammaSystem {
    pub fn theta(&self) -> Basis {
        self.theta
    }

    pub fn y(&self) -> Option<BitString> {
        self.y
    }

    pub fn phase(&self) -> GammaPhase {
        self.phase
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    /// The state with `r_az` and `r_bz` rotated so that `|z⟩_θ` reads as the
    /// computational `|z⟩`.
    pub fn theta_frame(&self) -> Result<StateVector, AttackError> {
        let s = rotate_register(&self.state, R_AZ, self.theta)?;
        Ok(rotate_register(&s, R_BZ, self.theta)?)
    }

    pub fn bob_reduced_state(&self) -> Result<DensityMatrix, AttackError> {
        Ok(self.state.partial_trace(&[R_BZ])?)
    }

    fn require(&self, operation: &'static str, needed: GammaPhase) -> Result<(), AttackError> {
        if self.phase != needed {
            return Err(AttackError::WrongPhase { operation, needed, actual: self.phase });
        }
        Ok(())
    }

    /// Measures `r_f` in the rectilinear basis; the outcome is the announced `y`.
    /// No inversion happens: the two preimages survive as the branches of
    /// the post-measurement state.
    pub fn kent_commit(&mut self, rng: &mut SimRng) -> Result<BitString, AttackError> {
        self.require("kent_commit", GammaPhase::Prepared)?;
        let m = self.state.measure(&[R_F], &vec![Basis::Rectilinear; self.width], rng)?;
        self.state = m.post_state;
        self.y = Some(m.outcome);
        self.phase = GammaPhase::Committed;
        Ok(m.outcome)
    }

    /// Measures `r_w` rectilinearly and `r_az` in `θ` (one joint measurement)
    /// and returns the unveiling `(x = θ, z, w)`.
    pub fn kent_unveil_for_test(&mut self, rng: &mut SimRng) -> Result<Unveiling, AttackError> {
        self.require("kent_unveil_for_test", GammaPhase::Committed)?;
        let mut bases = vec![Basis::Rectilinear; self.width];
        bases.push(self.theta);
        let m = self.state.measure(&[R_W, R_AZ], &bases, rng)?;
        self.state = m.post_state;
        self.phase = GammaPhase::Tested;
        let (w, z) = m.outcome.split(self.width);
        Ok(Unveiling { x: self.theta.bit(), z: z.bit(0), w })
    }

    /// XORs `f⁻¹_{θz}(y)` into `r_w`, controlled by `r_az` read in `θ`,
    /// which returns `r_w` to all zeros. Needs two inversions, so `audit`
    /// must already be unlocked.
    pub fn erase_rw(&mut self, fam: &PermutationFamily, audit: &mut InversionAudit) -> Result<(), AttackError> {
        self.require("erase_rw", GammaPhase::Committed)?;
        let y = self.y.expect("committed systems carry y");
        let x = self.theta.bit();
        let w0 = fam.invert_audited(audit, x, false, &y)?.value() as usize;
        let w1 = fam.invert_audited(audit, x, true, &y)?.value() as usize;
        let size = 1usize << self.width;
        let mut perm = vec![0usize; size * 2];
        for w in 0..size {
            perm[w * 2] = (w ^ w0) * 2;
            perm[w * 2 + 1] = (w ^ w1) * 2 + 1;
        }
        let mut s = rotate_register(&self.state, R_AZ, self.theta)?;
        s = s.apply_permutation(&perm, &[R_W, R_AZ])?;
        self.state = rotate_register(&s, R_AZ, self.theta)?;
        self.phase = GammaPhase::Erased;
        Ok(())
    }

    /// Opens bit `b` after erasure: the claimed basis is `x' = claimed_mask ⊕ b`;
    /// `r_az` is measured in it to get `z'`, and `w' = f⁻¹_{x'z'}(y)`.
    pub fn kent_open_as(
        &mut self,
        fam: &PermutationFamily,
        b: bool,
        claimed_mask: bool,
        audit: &mut InversionAudit,
        rng: &mut SimRng,
    ) -> Result<Unveiling, AttackError> {
        self.require("kent_open_as", GammaPhase::Erased)?;
        let x = claimed_mask ^ b;
        let m = self.state.measure(&[R_AZ], &[Basis::from_bit(x)], rng)?;
        let z = m.outcome.bit(0);
        let w = fam.invert_audited(audit, x, z, &self.y.expect("committed systems carry y"))?;
        self.state = m.post_state;
        self.phase = GammaPhase::Opened;
        Ok(Unveiling { x, z, w })
    }
}

/// Kent-scheme strategy built on [`GammaSystem`]: a uniformly random `θ_i`
/// per photon, masks `θ_i ⊕ b`, and at opening whatever bit is claimed.
#[derive(Debug, Clone, Default)]
pub struct KentAttacker {
    thetas: Vec<Basis>,
}

impl KentAttacker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn thetas(&self) -> &[Basis] {
        &self.thetas
    }
}

impl KentCommitter for KentAttacker {
    type System = GammaSystem;

    fn commit(&mut self, index: usize, ctx: &mut AliceContext<'_>) -> Result<(AliceMessage, GammaSystem), ProtocolError> {
        debug_assert_eq!(index, self.thetas.len());
        let theta = Basis::from_bit(ctx.rng.random());
        let mut sys = prepare_gamma(ctx.family, theta)?;
        let y = sys.kent_commit(ctx.rng)?;
        self.thetas.push(theta);
        Ok((AliceMessage::Commitment { y }, sys))
    }

    fn unveil(&mut self, _index: usize, sys: &mut GammaSystem, ctx: &mut AliceContext<'_>) -> Result<AliceMessage, ProtocolError> {
        Ok(AliceMessage::Unveiling(sys.kent_unveil_for_test(ctx.rng)?))
    }

    fn announce_mask(&mut self, index: usize, bit: bool, _ctx: &mut AliceContext<'_>) -> Result<AliceMessage, ProtocolError> {
        let theta = self.thetas.get(index).ok_or_else(|| ProtocolError::Strategy(format!("no photon {index}")))?;
        Ok(AliceMessage::Mask { bit: theta.bit() ^ bit })
    }

    fn open(
        &mut self,
        _index: usize,
        claim: bool,
        mask: bool,
        sys: &mut GammaSystem,
        ctx: &mut AliceContext<'_>,
    ) -> Result<AliceMessage, ProtocolError> {
        sys.erase_rw(ctx.family, ctx.audit)?;
        Ok(AliceMessage::Unveiling(sys.kent_open_as(ctx.family, claim, mask, ctx.audit, ctx.rng)?))
    }
}

/// `(|00⟩ + |11⟩)/√2` on `(r_az, r_bz)`.
pub fn bell_pair() -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let layout = RegisterMap::new(&[(R_AZ, 1), (R_BZ, 1)]).expect("fixed layout");
    StateVector::from_amplitudes(layout, vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]).expect("normalised")
}

/// A Bell-pair half held by Alice, the other half sent as the photon.
#[derive(Debug, Clone, PartialEq)]
pub struct EprPair(pub StateVector);

impl PhotonCarrier for EprPair {
    fn state(&self) -> &StateVector {
        &self.0
    }

    fn state_mut(&mut self) -> &mut StateVector {
        &mut self.0
    }
}

/// Sends one half of a Bell pair per photon; at opening measures her halves
/// in the basis of the claimed bit and reports the outcomes.
#[derive(Debug, Clone)]
pub struct EprAttacker {
    photons: usize,
}

pub fn epr_attack_bb84(photons: usize) -> Result<EprAttacker, AttackError> {
    if photons == 0 {
        return Err(AttackError::Invalid("at least one photon is needed".into()));
    }
    Ok(EprAttacker { photons })
}

impl Bb84Committer for EprAttacker {
    type System = EprPair;

    fn prepare(&mut self, index: usize, _rng: &mut SimRng) -> Result<EprPair, ProtocolError> {
        if index >= self.photons {
            return Err(ProtocolError::Strategy(format!("prepared for {} photons, asked for photon {index}", self.photons)));
        }
        Ok(EprPair(bell_pair()))
    }

    fn open(&mut self, claim: bool, systems: &mut [EprPair], rng: &mut SimRng) -> Result<AliceMessage, ProtocolError> {
        let basis = Basis::from_bit(claim);
        let mut values = Vec::with_capacity(systems.len());
        for sys in systems.iter_mut() {
            let m = sys.0.measure(&[R_AZ], &[basis], rng)?;
            sys.0 = m.post_state;
            values.push(m.outcome.bit(0));
        }
        Ok(AliceMessage::Bb84Open { bit: claim, values: BitString::from_bits(&values) })
    }
}

/// Computes a classical message at the quantum level and measures only it.
///
/// The input registers are read in `bases` (one per input qubit): they are
/// rotated into the computational basis, a fresh `out_width`-qubit register
/// `out_name` is appended and `|u⟩|v⟩ ↦ |u⟩|v ⊕ f(u)⟩` applied, then the
/// inputs are rotated back and `out_name` is measured rectilinearly. The
/// inputs stay in superposition, conditioned on the outcome.
pub fn coherent_message_eval<S, F>(
    state: &StateVector,
    inputs: &[S],
    bases: &[Basis],
    f: F,
    out_name: &str,
    out_width: usize,
    rng: &mut SimRng,
) -> Result<(BitString, StateVector), AttackError>
where
    S: AsRef<str>,
    F: Fn(u64) -> u64,
{
    let qubits = state.layout().qubits_of_all(inputs)?;
    if bases.len() != qubits.len() {
        return Err(QStateError::BasisCount { expected: qubits.len(), got: bases.len() }.into());
    }
    let h = UnitaryOp::hadamard();
    let rotate = |s: StateVector| -> Result<StateVector, QStateError> {
        let mut s = s;
        for (&q, &b) in qubits.iter().zip(bases) {
            if b == Basis::Diagonal {
                s = s.apply_on_qubits(h.matrix(), &[q])?;
            }
        }
        Ok(s)
    };
    let out = StateVector::zeros(RegisterMap::single(out_name, out_width)?);
    let mut s = rotate(state.clone())?.tensor(&out)?;
    let in_size = 1u64 << qubits.len();
    let out_size = 1u64 << out_width;
    let mut perm = vec![0usize; (in_size * out_size) as usize];
    for u in 0..in_size {
        let fu = f(u);
        if fu >= out_size {
            return Err(AttackError::Invalid(format!("f({u}) = {fu} does not fit in {out_width} bits")));
        }
        for v in 0..out_size {
            perm[(u * out_size + v) as usize] = (u * out_size + (v ^ fu)) as usize;
        }
    }
    let mut targets: Vec<&str> = inputs.iter().map(AsRef::as_ref).collect();
    targets.push(out_name);
    s = s.apply_permutation(&perm, &targets)?;
    s = rotate(s)?;
    let m = s.measure(&[out_name], &vec![Basis::Rectilinear; out_width], rng)?;
    Ok((m.outcome, m.post_state))
}

/// A protocol with every measurement deferred: committing to `b` means
/// applying `U_b` to a fixed initial state, after which side B (Bob) holds
/// its part of `U_b|ψ⟩`.
#[derive(Debug, Clone)]
pub struct PurifiedProtocol {
    initial: StateVector,
    commit_unitaries: [UnitaryOp; 2],
    bipartition: Bipartition,
}

impl PurifiedProtocol {
    pub fn new(initial: StateVector, u0: UnitaryOp, u1: UnitaryOp, bipartition: Bipartition) -> Result<Self, AttackError> {
        bipartition.validate(initial.layout())?;
        for u in [&u0, &u1] {
            if u.dim() != initial.dim() {
                return Err(QStateError::DimensionMismatch { expected: initial.dim(), got: u.dim() }.into());
            }
        }
        Ok(Self { initial, commit_unitaries: [u0, u1], bipartition })
    }

    pub fn initial(&self) -> &StateVector {
        &self.initial
    }

    pub fn bipartition(&self) -> &Bipartition {
        &self.bipartition
    }

    pub fn commit_unitary(&self, b: bool) -> &UnitaryOp {
        &self.commit_unitaries[b as usize]
    }

    /// `|φ_b⟩ = U_b|ψ⟩`.
    pub fn committed_state(&self, b: bool) -> Result<StateVector, AttackError> {
        let names = self.initial.layout().names();
        Ok(self.initial.apply_unitary(self.commit_unitary(b), &names)?)
    }
}

/// Output of [`generic_attack`].
#[derive(Debug, Clone)]
pub struct GenericAttack {
    pub prepared: StateVector,
    /// Side-A unitary Alice applies before opening bit `b`.
    pub open_map: [UnitaryOp; 2],
    pub predicted_overlap: [f64; 2],
    /// Whether Bob's reduced states agreed, so opening either bit is exact.
    pub exact: bool,
    targets: [StateVector; 2],
    bipartition: Bipartition,
}

impl GenericAttack {
    /// `|⟨φ_b|(F_b ⊗ I)|prepared⟩|`.
    pub fn achieved_overlap(&self, b: bool) -> Result<f64, AttackError> {
        let i = b as usize;
        Ok(side_a_overlap(&self.prepared, &self.open_map[i], &self.targets[i], &self.bipartition)?)
    }

    pub fn target(&self, b: bool) -> &StateVector {
        &self.targets[b as usize]
    }
}

/// Alice commits honestly to 0 (prepares `|φ_0⟩`) and, to open `b`, applies
/// the side-A unitary that best maps it onto `|φ_b⟩`.
///
/// When Bob's reduced states coincide the map to `|φ_1⟩` is exact. Otherwise
/// it is the overlap-maximising one and the overlap it reaches is the
/// fidelity of Bob's two reduced states.
pub fn generic_attack(p: &PurifiedProtocol) -> Result<GenericAttack, AttackError> {
    let bip = p.bipartition.clone();
    let phi0 = p.committed_state(false)?;
    let phi1 = p.committed_state(true)?;
    let dim_a = phi0.layout().sublayout(&bip.a)?.dim();
    let identity = UnitaryOp::identity(dim_a);
    let d = trace_distance(&phi0.partial_trace(&bip.b)?, &phi1.partial_trace(&bip.b)?)?;
    let (open1, predicted1, exact) = if d <= SPECTRAL_TOL {
        (cheat_unitary(&phi0, &phi1, &bip)?, 1.0, true)
    } else {
        let (u, _) = uhlmann_unitary(&phi0, &phi1, &bip)?;
        (u, reduced_fidelity(&phi0, &phi1, &bip)?, false)
    };
    Ok(GenericAttack {
        prepared: phi0.clone(),
        open_map: [identity, open1],
        predicted_overlap: [1.0, predicted1],
        exact,
        targets: [phi0, phi1],
        bipartition: bip,
    })
}
