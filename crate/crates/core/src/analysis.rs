//! Attack mathematics for purified commitment protocols.
//!
//! * [`schmidt_decompose`]: Schmidt form of a bipartite pure state.
//! * [`cheat_unitary`]: when Bob's reduced states for the two committed bits
//!   coincide, a unitary on Alice's side alone maps one purification onto
//!   the other.
//! * [`uhlmann_unitary`]: the general case, a side-A unitary maximising the
//!   overlap; its value is the fidelity of Bob's reduced states.
//! * [`distinguishing_error`]: minimum error probability of any binary
//!   measurement separating two density matrices (Helstrom).

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::qstate::{
    c, fidelity, hermitian_eigen, trace_distance, trace_norm, Bipartition, DensityMatrix, QStateError, StateVector,
    UnitaryOp, C64, SPECTRAL_TOL,
};

/// Schmidt coefficients at or below this are treated as zero.
pub const SCHMIDT_CUTOFF: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    State(#[from] QStateError),
    #[error("reduced states on side B differ (trace distance {0:e}); use uhlmann_unitary")]
    ReducedStateMismatch(f64),
    #[error("priors must lie in [0, 1], got {0}")]
    BadPrior(f64),
    #[error("invalid analysis config: {0}")]
    BadConfig(String),
}

/// `|s⟩ = Σ_i √λ_i |a_i⟩ ⊗ |b_i⟩` with `λ` descending.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    pub a_vectors: Vec<DVector<C64>>,
    pub b_vectors: Vec<DVector<C64>>,
    pub bipartition: Bipartition,
}

impl SchmidtDecomposition {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    /// `Σ √λ_i a_i b_iᵀ` as an A×B coefficient matrix.
    pub fn coefficient_matrix(&self) -> DMatrix<C64> {
        let da = self.a_vectors.first().map_or(0, |v| v.len());
        let db = self.b_vectors.first().map_or(0, |v| v.len());
        let mut m = DMatrix::zeros(da, db);
        for ((l, a), b) in self.coefficients.iter().zip(&self.a_vectors).zip(&self.b_vectors) {
            m += (a * b.transpose()).scale(l.sqrt());
        }
        m
    }

    /// Rebuilds the state over `template`'s layout.
    pub fn reconstruct(&self, template: &StateVector) -> Result<StateVector, QStateError> {
        StateVector::from_bipartite_matrix(template.layout().clone(), &self.bipartition, &self.coefficient_matrix())
    }
}

/// Eigen-decomposition of the B-side reduced state, restricted to
/// eigenvalues above the cutoff: `(λ_i, f_i)`.
fn b_side_spectrum(psi: &DMatrix<C64>) -> (Vec<f64>, Vec<DVector<C64>>) {
    // ρ_B[b, b'] = Σ_a Ψ[a, b] conj(Ψ[a, b'])
    let rho_b = psi.transpose() * psi.map(|z| z.conj());
    let (vals, vecs) = hermitian_eigen(&rho_b);
    vals.iter()
        .enumerate()
        .filter(|(_, &l)| l > SCHMIDT_CUTOFF)
        .map(|(k, &l)| (l, vecs.column(k).into_owned()))
        .unzip()
}

/// Back-solves `a_i = (I ⊗ ⟨f_i|)|ψ⟩ / √λ_i = Ψ · conj(f_i) / √λ_i`.
fn back_solve(psi: &DMatrix<C64>, lambdas: &[f64], fs: &[DVector<C64>]) -> Vec<DVector<C64>> {
    lambdas
        .iter()
        .zip(fs)
        .map(|(l, f)| (psi * f.map(|z| z.conj())).unscale(l.sqrt()))
        .collect()
}

/// Schmidt decomposition computed from the spectral decomposition of the
/// side-B reduced state. The A-side vectors are back-solved from the state
/// so that the pairing stays correct when coefficients are degenerate.
pub fn schmidt_decompose(s: &StateVector, bip: &Bipartition) -> Result<SchmidtDecomposition, AnalysisError> {
    let psi = s.bipartite_matrix(bip)?;
    let (coefficients, b_vectors) = b_side_spectrum(&psi);
    let a_vectors = back_solve(&psi, &coefficients, &b_vectors);
    Ok(SchmidtDecomposition { coefficients, a_vectors, b_vectors, bipartition: bip.clone() })
}

/// Orthonormalises `vectors` in order (modified Gram–Schmidt, two passes)
/// and completes them to a basis of the full space with canonical vectors.
/// Returned as the columns of a unitary matrix.
fn complete_basis(vectors: &[DVector<C64>], dim: usize) -> DMatrix<C64> {
    let mut basis: Vec<DVector<C64>> = Vec::with_capacity(dim);
    let candidates = vectors.iter().cloned().chain((0..dim).map(|k| {
        let mut e = DVector::zeros(dim);
        e[k] = c(1.0, 0.0);
        e
    }));
    for mut v in candidates {
        if basis.len() == dim {
            break;
        }
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            basis.push(v.unscale(n));
        }
    }
    DMatrix::from_columns(&basis)
}

/// Side-A unitary `U` with `(U ⊗ I)|φ0⟩ = |φ1⟩`, valid when the two states
/// have the same reduced state on side B.
///
/// Both states are decomposed against one fixed eigenbasis `{f_i}` of
/// `ρ_B`, giving `|φ_b⟩ = Σ √λ_i |e_i^(b)⟩|f_i⟩`; `U` sends `e_i^(0)` to
/// `e_i^(1)` and matches canonical Gram–Schmidt completions off the support.
pub fn cheat_unitary(phi0: &StateVector, phi1: &StateVector, bip: &Bipartition) -> Result<UnitaryOp, AnalysisError> {
    if phi0.layout() != phi1.layout() {
        return Err(QStateError::LayoutMismatch.into());
    }
    let rb0 = phi0.partial_trace(&bip.b)?;
    let rb1 = phi1.partial_trace(&bip.b)?;
    let d = trace_distance(&rb0, &rb1)?;
    if d > SPECTRAL_TOL {
        return Err(AnalysisError::ReducedStateMismatch(d));
    }
    let psi0 = phi0.bipartite_matrix(bip)?;
    let psi1 = phi1.bipartite_matrix(bip)?;
    let (lambdas, fs) = b_side_spectrum(&psi0);
    let e0 = back_solve(&psi0, &lambdas, &fs);
    let e1 = back_solve(&psi1, &lambdas, &fs);
    let dim_a = psi0.nrows();
    let basis0 = complete_basis(&e0, dim_a);
    let basis1 = complete_basis(&e1, dim_a);
    Ok(UnitaryOp::new(&basis1 * basis0.adjoint())?)
}

/// `|⟨phi|(U ⊗ I)|psi⟩|` for a side-A unitary.
pub fn side_a_overlap(psi: &StateVector, u: &UnitaryOp, phi: &StateVector, bip: &Bipartition) -> Result<f64, AnalysisError> {
    let moved = psi.apply_unitary(u, &bip.a)?;
    Ok(phi.inner(&moved)?.norm())
}

/// Side-A unitary maximising `|⟨phi1|(U ⊗ I)|psi0⟩|`, with the overlap it
/// achieves.
///
/// Writing the states as A×B coefficient matrices, the overlap is
/// `|tr(U · Ψ0 Ψ1†)|`. With the singular value decomposition
/// `Ψ0 Ψ1† = W Σ V†` the maximum is `tr Σ`, reached at `U = V W†`; it equals
/// the fidelity of the two side-B reduced states.
pub fn uhlmann_unitary(psi0: &StateVector, phi1: &StateVector, bip: &Bipartition) -> Result<(UnitaryOp, f64), AnalysisError> {
    if psi0.layout() != phi1.layout() {
        return Err(QStateError::LayoutMismatch.into());
    }
    let m0 = psi0.bipartite_matrix(bip)?;
    let m1 = phi1.bipartite_matrix(bip)?;
    let cross = &m0 * m1.adjoint();
    let svd = cross.svd(true, true);
    let w = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V†");
    let u = UnitaryOp::new(v_t.adjoint() * w.adjoint())?;
    let overlap = side_a_overlap(psi0, &u, phi1, bip)?;
    Ok((u, overlap))
}

/// Two density matrices with a prior on which one was prepared.
#[derive(Debug, Clone)]
pub struct DiscriminationInstance {
    rho0: DensityMatrix,
    rho1: DensityMatrix,
    prior0: f64,
}

impl DiscriminationInstance {
    pub fn new(rho0: DensityMatrix, rho1: DensityMatrix, prior0: f64) -> Result<Self, AnalysisError> {
        if !(0.0..=1.0).contains(&prior0) {
            return Err(AnalysisError::BadPrior(prior0));
        }
        if rho0.dim() != rho1.dim() {
            return Err(QStateError::DimensionMismatch { expected: rho0.dim(), got: rho1.dim() }.into());
        }
        Ok(Self { rho0, rho1, prior0 })
    }

    pub fn equal_priors(rho0: DensityMatrix, rho1: DensityMatrix) -> Result<Self, AnalysisError> {
        Self::new(rho0, rho1, 0.5)
    }

    pub fn rho0(&self) -> &DensityMatrix {
        &self.rho0
    }

    pub fn rho1(&self) -> &DensityMatrix {
        &self.rho1
    }

    pub fn prior0(&self) -> f64 {
        self.prior0
    }

    pub fn prior1(&self) -> f64 {
        1.0 - self.prior0
    }

    fn weighted_difference(&self) -> DMatrix<C64> {
        self.rho0.matrix().scale(self.prior0) - self.rho1.matrix().scale(self.prior1())
    }

    /// Error probability of the measurement `{P, I − P}` that guesses 0 on `P`.
    pub fn error_of(&self, projector: &DMatrix<C64>) -> f64 {
        let dim = projector.nrows();
        let not_p = DMatrix::<C64>::identity(dim, dim) - projector;
        self.prior0 * (self.rho0.matrix() * not_p).trace().re + self.prior1() * (self.rho1.matrix() * projector).trace().re
    }
}

/// Security parameters of a concealment bound `|½ − PE| ≤ 2^{−αn}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    alpha: f64,
    n_photons: u32,
}

impl AnalysisConfig {
    pub fn new(alpha: f64, n_photons: u32) -> Result<Self, AnalysisError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(AnalysisError::BadConfig(format!("alpha must be positive and finite, got {alpha}")));
        }
        let cfg = Self { alpha, n_photons };
        let eps = cfg.epsilon();
        if !(eps > 0.0 && eps < 1.0) {
            return Err(AnalysisError::BadConfig(format!("2^(-alpha*n) = {eps} is not in (0, 1)")));
        }
        Ok(cfg)
    }

    /// `2^{−αn}`.
    pub fn epsilon(&self) -> f64 {
        (-(self.alpha * self.n_photons as f64)).exp2()
    }
}

/// Minimum error probability over all binary measurements:
/// `½ (1 − ‖p0 ρ0 − p1 ρ1‖₁)`.
pub fn distinguishing_error(inst: &DiscriminationInstance) -> f64 {
    (0.5 * (1.0 - trace_norm(&inst.weighted_difference()))).clamp(0.0, 0.5)
}

/// Projector onto the positive eigenspace of `p0 ρ0 − p1 ρ1`; guessing 0 on
/// it attains [`distinguishing_error`].
pub fn helstrom_projector(inst: &DiscriminationInstance) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(&inst.weighted_difference());
    let dim = vals.len();
    let mut p = DMatrix::zeros(dim, dim);
    for (k, v) in vals.iter().enumerate() {
        if *v > 0.0 {
            let col = vecs.column(k);
            p += col * col.adjoint();
        }
    }
    p
}

/// True iff `|½ − PE| ≤ 2^{−αn}`.
pub fn check_concealment_bound(inst: &DiscriminationInstance, cfg: &AnalysisConfig) -> bool {
    (0.5 - distinguishing_error(inst)).abs() <= cfg.epsilon()
}

/// Fidelity of the side-B reduced states of two states on the same layout.
pub fn reduced_fidelity(s0: &StateVector, s1: &StateVector, bip: &Bipartition) -> Result<f64, AnalysisError> {
    let r0 = s0.partial_trace(&bip.b)?;
    let r1 = s1.partial_trace(&bip.b)?;
    Ok(fidelity(&r0, &r1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{Basis, RegisterMap};

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn two_qubit(amps: [f64; 4]) -> StateVector {
        let layout = RegisterMap::new(&[("a", 1), ("b", 1)]).unwrap();
        StateVector::normalized(layout, amps.iter().map(|&x| c(x, 0.0)).collect()).unwrap()
    }

    fn ab() -> Bipartition {
        Bipartition::new(&["a"], &["b"])
    }

    #[test]
    fn product_state_has_rank_one() {
        let a = StateVector::qubit("a", Basis::Rectilinear, false).unwrap();
        let b = StateVector::qubit("b", Basis::Diagonal, false).unwrap();
        let s = a.tensor(&b).unwrap();
        let d = schmidt_decompose(&s, &ab()).unwrap();
        assert_eq!(d.rank(), 1);
        assert!((d.coefficients[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_state_has_two_equal_coefficients() {
        let d = schmidt_decompose(&two_qubit([1.0, 0.0, 0.0, 1.0]), &ab()).unwrap();
        assert_eq!(d.rank(), 2);
        for l in &d.coefficients {
            assert!((l - 0.5).abs() < 1e-12);
        }
        let s = two_qubit([1.0, 0.0, 0.0, 1.0]);
        let back = d.reconstruct(&s).unwrap();
        assert!((back.amplitudes() - s.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn cheat_unitary_is_a_bit_flip_for_bell_pairs() {
        let phi0 = two_qubit([1.0, 0.0, 0.0, 1.0]);
        let phi1 = two_qubit([0.0, 1.0, 1.0, 0.0]);
        let u = cheat_unitary(&phi0, &phi1, &ab()).unwrap();
        let x = UnitaryOp::pauli_x();
        assert!((u.matrix() - x.matrix()).norm() < 1e-9);
        let moved = phi0.apply_unitary(&u, &["a"]).unwrap();
        assert!((moved.amplitudes() - phi1.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn cheat_unitary_on_identical_states() {
        let phi = two_qubit([0.3, 0.1, -0.2, 0.9]);
        let u = cheat_unitary(&phi, &phi, &ab()).unwrap();
        assert!((side_a_overlap(&phi, &u, &phi, &ab()).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cheat_unitary_refuses_mismatched_reductions() {
        let phi0 = two_qubit([1.0, 0.0, 0.0, 0.0]);
        let phi1 = two_qubit([0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(cheat_unitary(&phi0, &phi1, &ab()), Err(AnalysisError::ReducedStateMismatch(_))));
    }

    #[test]
    fn uhlmann_with_equal_reductions_reaches_one() {
        let phi0 = two_qubit([1.0, 0.0, 0.0, 1.0]);
        let phi1 = two_qubit([0.0, 1.0, 1.0, 0.0]);
        let (_, ov) = uhlmann_unitary(&phi0, &phi1, &ab()).unwrap();
        assert!((ov - 1.0).abs() < 1e-7);
    }

    #[test]
    fn uhlmann_with_orthogonal_supports_is_zero() {
        // ρ_B = |0⟩⟨0| versus |1⟩⟨1|
        let psi0 = two_qubit([1.0, 0.0, 0.0, 0.0]);
        let phi1 = two_qubit([0.0, 1.0, 0.0, 1.0]);
        let (_, ov) = uhlmann_unitary(&psi0, &phi1, &ab()).unwrap();
        assert!(ov < 1e-7);
    }

    fn pure(s: &StateVector) -> DensityMatrix {
        DensityMatrix::from_pure(s)
    }

    #[test]
    fn helstrom_closed_forms() {
        let zero = pure(&StateVector::qubit("q", Basis::Rectilinear, false).unwrap());
        let one = pure(&StateVector::qubit("q", Basis::Rectilinear, true).unwrap());
        let plus = pure(&StateVector::qubit("q", Basis::Diagonal, false).unwrap());

        let same = DiscriminationInstance::new(plus.clone(), plus.clone(), 0.3).unwrap();
        assert!((distinguishing_error(&same) - 0.3).abs() < 1e-9);
        let same_eq = DiscriminationInstance::equal_priors(plus.clone(), plus.clone()).unwrap();
        assert!((distinguishing_error(&same_eq) - 0.5).abs() < 1e-9);

        let orth = DiscriminationInstance::equal_priors(zero.clone(), one).unwrap();
        assert!(distinguishing_error(&orth) < 1e-9);

        let inst = DiscriminationInstance::equal_priors(zero, plus).unwrap();
        let want = (1.0 - H) / 2.0;
        assert!((distinguishing_error(&inst) - want).abs() < 1e-9);
        let p = helstrom_projector(&inst);
        assert!((inst.error_of(&p) - want).abs() < 1e-9);
    }

    #[test]
    fn instance_validation() {
        let a = DensityMatrix::maximally_mixed(2);
        assert!(matches!(DiscriminationInstance::new(a.clone(), a.clone(), 1.5), Err(AnalysisError::BadPrior(_))));
        assert!(DiscriminationInstance::new(a, DensityMatrix::maximally_mixed(4), 0.5).is_err());
    }

    #[test]
    fn concealment_bound_cases() {
        let cfg = AnalysisConfig::new(1.0, 10).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        let same = DiscriminationInstance::equal_priors(mixed.clone(), mixed).unwrap();
        assert!(check_concealment_bound(&same, &cfg));

        let zero = pure(&StateVector::qubit("q", Basis::Rectilinear, false).unwrap());
        let one = pure(&StateVector::qubit("q", Basis::Rectilinear, true).unwrap());
        let orth = DiscriminationInstance::equal_priors(zero, one).unwrap();
        assert!(!check_concealment_bound(&orth, &cfg));

        assert!(AnalysisConfig::new(0.0, 3).is_err());
        assert!(AnalysisConfig::new(1.0, 0).is_err());
        assert!(AnalysisConfig::new(1e6, 1000).is_err());
    }
}
