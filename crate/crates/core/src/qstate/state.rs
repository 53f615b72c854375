use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{c, Basis, Bipartition, DensityMatrix, QStateError, RegisterMap, UnitaryOp, C64, STRUCTURAL_TOL};
use crate::bits::BitString;

/// Pure state of a multi-register system. See [`RegisterMap`] for the index
/// convention.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: RegisterMap,
    amplitudes: DVector<C64>,
}

/// Result of a projective measurement.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub outcome: BitString,
    pub post_state: StateVector,
    pub probability: f64,
}

impl StateVector {
    /// Builds a state from explicit amplitudes; the norm must be 1 within 1e-9.
    pub fn from_amplitudes(layout: RegisterMap, amplitudes: Vec<C64>) -> Result<Self, QStateError> {
        if amplitudes.len() != layout.dim() {
            return Err(QStateError::DimensionMismatch { expected: layout.dim(), got: amplitudes.len() });
        }
        let amplitudes = DVector::from_vec(amplitudes);
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > STRUCTURAL_TOL {
            return Err(QStateError::NotNormalized(norm));
        }
        Ok(Self { layout, amplitudes })
    }

    /// Builds a state from arbitrary nonzero amplitudes, rescaling to unit norm.
    pub fn normalized(layout: RegisterMap, amplitudes: Vec<C64>) -> Result<Self, QStateError> {
        if amplitudes.len() != layout.dim() {
            return Err(QStateError::DimensionMismatch { expected: layout.dim(), got: amplitudes.len() });
        }
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if norm < 1e-300 {
            return Err(QStateError::NotNormalized(norm));
        }
        Ok(Self { layout, amplitudes: v.unscale(norm) })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(layout: RegisterMap, index: usize) -> Result<Self, QStateError> {
        let dim = layout.dim();
        if index >= dim {
            return Err(QStateError::DimensionMismatch { expected: dim, got: index });
        }
        let mut amps = DVector::zeros(dim);
        amps[index] = c(1.0, 0.0);
        Ok(Self { layout, amplitudes: amps })
    }

    /// All registers set to zero.
    pub fn zeros(layout: RegisterMap) -> Self {
        Self::basis(layout, 0).expect("index 0 is always in range")
    }

    /// Single-qubit register named `name` holding `|bit⟩_basis`.
    pub fn qubit(name: &str, basis: Basis, bit: bool) -> Result<Self, QStateError> {
        let layout = RegisterMap::single(name, 1)?;
        Ok(Self { layout, amplitudes: DVector::from_column_slice(&basis.ket(bit)) })
    }

    pub fn layout(&self) -> &RegisterMap {
        &self.layout
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64, QStateError> {
        if self.layout != other.layout {
            return Err(QStateError::LayoutMismatch);
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|self⟩ ⊗ |other⟩`; `self`'s registers come first.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector, QStateError> {
        let layout = self.layout.concat(&other.layout)?;
        let amplitudes = self.amplitudes.kronecker(&other.amplitudes);
        Ok(StateVector { layout, amplitudes })
    }

    /// Applies `u` to the registers `targets` (concatenated in the given
    /// order, first register most significant) and the identity elsewhere.
    pub fn apply_unitary<S: AsRef<str>>(&self, u: &UnitaryOp, targets: &[S]) -> Result<StateVector, QStateError> {
        let qubits = self.layout.qubits_of_all(targets)?;
        self.apply_on_qubits(u.matrix(), &qubits)
    }

    /// Applies `u` to an explicit list of qubit positions.
    pub fn apply_on_qubits(&self, u: &DMatrix<C64>, qubits: &[usize]) -> Result<StateVector, QStateError> {
        let k = qubits.len();
        if u.nrows() != 1 << k {
            return Err(QStateError::DimensionMismatch { expected: 1 << k, got: u.nrows() });
        }
        if qubits.iter().any(|&q| q >= self.layout.total_width()) {
            return Err(QStateError::DimensionMismatch { expected: self.layout.total_width(), got: k });
        }
        let offsets = self.layout.scatter_table(qubits);
        let mask = self.layout.qubit_mask(qubits);
        let sub = offsets.len();
        let mut out = DVector::zeros(self.dim());
        let mut local = vec![C64::new(0.0, 0.0); sub];
        for base in (0..self.dim()).filter(|i| i & mask == 0) {
            for (slot, off) in local.iter_mut().zip(&offsets) {
                *slot = self.amplitudes[base | off];
            }
            for r in 0..sub {
                let mut acc = C64::new(0.0, 0.0);
                for (col, a) in local.iter().enumerate() {
                    acc += u[(r, col)] * a;
                }
                out[base | offsets[r]] = acc;
            }
        }
        Ok(StateVector { layout: self.layout.clone(), amplitudes: out })
    }

    /// Applies the basis permutation `|u⟩ ↦ |perm[u]⟩` on the sub-register
    /// formed by `targets`. This is the reversible-classical-computation path
    /// used for table evaluation; it avoids materialising the dense matrix.
    pub fn apply_permutation<S: AsRef<str>>(&self, perm: &[usize], targets: &[S]) -> Result<StateVector, QStateError> {
        let qubits = self.layout.qubits_of_all(targets)?;
        if perm.len() != 1 << qubits.len() {
            return Err(QStateError::DimensionMismatch { expected: 1 << qubits.len(), got: perm.len() });
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || seen[p] {
                return Err(QStateError::NotPermutation);
            }
            seen[p] = true;
        }
        let offsets = self.layout.scatter_table(&qubits);
        let mask = self.layout.qubit_mask(&qubits);
        let mut out = DVector::zeros(self.dim());
        for base in (0..self.dim()).filter(|i| i & mask == 0) {
            for (src, &dst) in perm.iter().enumerate() {
                out[base | offsets[dst]] = self.amplitudes[base | offsets[src]];
            }
        }
        Ok(StateVector { layout: self.layout.clone(), amplitudes: out })
    }

    /// Rotates each listed qubit from `basis` into the computational basis
    /// (and back: the basis changes are self-inverse).
    fn rotate(&self, qubits: &[usize], bases: &[Basis]) -> Result<StateVector, QStateError> {
        let mut s = self.clone();
        for (&q, &b) in qubits.iter().zip(bases) {
            if b == Basis::Diagonal {
                s = s.apply_on_qubits(UnitaryOp::hadamard().matrix(), &[q])?;
            }
        }
        Ok(s)
    }

    fn measurement_qubits<S: AsRef<str>>(&self, targets: &[S], bases: &[Basis]) -> Result<Vec<usize>, QStateError> {
        let qubits = self.layout.qubits_of_all(targets)?;
        if qubits.is_empty() {
            return Err(QStateError::EmptySelection);
        }
        if bases.len() != qubits.len() {
            return Err(QStateError::BasisCount { expected: qubits.len(), got: bases.len() });
        }
        Ok(qubits)
    }

    /// Born probabilities of every outcome of measuring `targets` with one
    /// basis per qubit. Entry `k` is the probability of outcome value `k`.
    pub fn outcome_probabilities<S: AsRef<str>>(&self, targets: &[S], bases: &[Basis]) -> Result<Vec<f64>, QStateError> {
        let qubits = self.measurement_qubits(targets, bases)?;
        let rotated = self.rotate(&qubits, bases)?;
        Ok(rotated.computational_probabilities(&qubits))
    }

    fn computational_probabilities(&self, qubits: &[usize]) -> Vec<f64> {
        let offsets = self.layout.scatter_table(qubits);
        let mask = self.layout.qubit_mask(qubits);
        let mut probs = vec![0.0; offsets.len()];
        for base in (0..self.dim()).filter(|i| i & mask == 0) {
            for (k, off) in offsets.iter().enumerate() {
                probs[k] += self.amplitudes[base | off].norm_sqr();
            }
        }
        probs
    }

    /// Projects onto a given outcome. Returns the Born weight and the
    /// renormalised post-measurement state (`None` when the weight is zero).
    pub fn project<S: AsRef<str>>(
        &self,
        targets: &[S],
        bases: &[Basis],
        outcome: &BitString,
    ) -> Result<(f64, Option<StateVector>), QStateError> {
        let qubits = self.measurement_qubits(targets, bases)?;
        if outcome.width() != qubits.len() {
            return Err(QStateError::BasisCount { expected: qubits.len(), got: outcome.width() });
        }
        let rotated = self.rotate(&qubits, bases)?;
        let offsets = self.layout.scatter_table(&qubits);
        let mask = self.layout.qubit_mask(&qubits);
        let keep = offsets[outcome.value() as usize];
        let mut amps = DVector::zeros(self.dim());
        for i in (0..self.dim()).filter(|i| i & mask == keep) {
            amps[i] = rotated.amplitudes[i];
        }
        let p = amps.norm_squared();
        if p <= 0.0 {
            return Ok((0.0, None));
        }
        let projected = StateVector { layout: self.layout.clone(), amplitudes: amps.unscale(p.sqrt()) };
        Ok((p, Some(projected.rotate(&qubits, bases)?)))
    }

    /// Samples a projective measurement of `targets`, one basis per target
    /// qubit. Consumes exactly one uniform draw from `rng`; outcomes are
    /// scanned in increasing value order against the cumulative distribution.
    pub fn measure<S: AsRef<str>, R: Rng + ?Sized>(
        &self,
        targets: &[S],
        bases: &[Basis],
        rng: &mut R,
    ) -> Result<Measurement, QStateError> {
        let qubits = self.measurement_qubits(targets, bases)?;
        let probs = self.outcome_probabilities(targets, bases)?;
        let u: f64 = rng.random();
        let total: f64 = probs.iter().sum();
        let target = u * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (k, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            chosen = Some(k);
            if target < acc {
                break;
            }
        }
        let k = chosen.expect("a normalised state has at least one outcome with positive weight");
        let outcome = BitString::new(k as u64, qubits.len()).expect("outcome fits its width");
        let (probability, post) = self.project(targets, bases, &outcome)?;
        let post_state = post.expect("sampled outcome has positive weight");
        Ok(Measurement { outcome, post_state, probability })
    }

    /// Reduced density matrix on `keep` (registers in the given order).
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<DensityMatrix, QStateError> {
        if keep.is_empty() {
            return Err(QStateError::EmptySelection);
        }
        let names: Vec<String> = keep.iter().map(|s| s.as_ref().to_string()).collect();
        let rest = self.layout.complement(&names);
        let m = self.split_matrix(&names, &rest)?;
        let rho = &m * m.adjoint();
        Ok(DensityMatrix::from_parts(rho, Some(self.layout.sublayout(&names)?)))
    }

    /// Coefficient matrix with rows indexed by side A and columns by side B,
    /// so that `|s⟩ = Σ M[a,b] |a⟩_A |b⟩_B`.
    pub fn bipartite_matrix(&self, bip: &Bipartition) -> Result<DMatrix<C64>, QStateError> {
        bip.validate(&self.layout)?;
        self.split_matrix(&bip.a, &bip.b)
    }

    fn split_matrix<S: AsRef<str>>(&self, rows: &[S], cols: &[S]) -> Result<DMatrix<C64>, QStateError> {
        let rq = self.layout.qubits_of_all(rows)?;
        let cq = self.layout.qubits_of_all(cols)?;
        let r_off = self.layout.scatter_table(&rq);
        let c_off = self.layout.scatter_table(&cq);
        Ok(DMatrix::from_fn(r_off.len(), c_off.len(), |i, j| self.amplitudes[r_off[i] | c_off[j]]))
    }

    /// Inverse of [`bipartite_matrix`](Self::bipartite_matrix).
    pub fn from_bipartite_matrix(layout: RegisterMap, bip: &Bipartition, m: &DMatrix<C64>) -> Result<StateVector, QStateError> {
        bip.validate(&layout)?;
        let aq = layout.qubits_of_all(&bip.a)?;
        let bq = layout.qubits_of_all(&bip.b)?;
        let a_off = layout.scatter_table(&aq);
        let b_off = layout.scatter_table(&bq);
        if m.nrows() != a_off.len() || m.ncols() != b_off.len() {
            return Err(QStateError::DimensionMismatch { expected: a_off.len() * b_off.len(), got: m.len() });
        }
        let mut amps = vec![C64::new(0.0, 0.0); layout.dim()];
        for (i, ao) in a_off.iter().enumerate() {
            for (j, bo) in b_off.iter().enumerate() {
                amps[ao | bo] = m[(i, j)];
            }
        }
        StateVector::from_amplitudes(layout, amps)
    }

    /// Same state with registers listed in `order` (a permutation of the
    /// current register names).
    pub fn reorder<S: AsRef<str>>(&self, order: &[S]) -> Result<StateVector, QStateError> {
        let new_layout = self.layout.sublayout(order)?;
        if new_layout.total_width() != self.layout.total_width() {
            return Err(QStateError::BadBipartition("reorder must list every register".into()));
        }
        let qubits = self.layout.qubits_of_all(order)?;
        let old_offsets = self.layout.scatter_table(&qubits);
        // New index k has the same register values as old index old_offsets[k].
        let amps = DVector::from_fn(self.dim(), |k, _| self.amplitudes[old_offsets[k]]);
        Ok(StateVector { layout: new_layout, amplitudes: amps })
    }

    /// Nonzero computational-basis branches as `(index, amplitude)`.
    pub fn branches(&self, cutoff: f64) -> Vec<(usize, C64)> {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > cutoff)
            .map(|(i, a)| (i, *a))
            .collect()
    }

    /// Value held by register `name` in basis state `index`.
    pub fn register_value(&self, index: usize, name: &str) -> Result<u64, QStateError> {
        let r = self.layout.qubits_of(name)?;
        let shift = self.layout.total_width() - r.end;
        Ok(((index >> shift) & ((1 << r.len()) - 1)) as u64)
    }
}
