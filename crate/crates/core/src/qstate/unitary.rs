use nalgebra::DMatrix;

use super::{c, Basis, QStateError, C64, STRUCTURAL_TOL};

/// A unitary matrix, checked for `U·U† = I` at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOp {
    matrix: DMatrix<C64>,
}

impl UnitaryOp {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self, QStateError> {
        if !matrix.is_square() {
            return Err(QStateError::NotSquare(matrix.nrows(), matrix.ncols()));
        }
        let defect = unitarity_defect(&matrix);
        if defect > STRUCTURAL_TOL {
            return Err(QStateError::NotUnitary(defect));
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: DMatrix::identity(dim, dim) }
    }

    /// Permutation matrix sending basis state `j` to `perm[j]`.
    pub fn from_permutation(perm: &[usize]) -> Result<Self, QStateError> {
        let dim = perm.len();
        let mut seen = vec![false; dim];
        let mut m = DMatrix::zeros(dim, dim);
        for (j, &i) in perm.iter().enumerate() {
            if i >= dim || seen[i] {
                return Err(QStateError::NotPermutation);
            }
            seen[i] = true;
            m[(i, j)] = c(1.0, 0.0);
        }
        Ok(Self { matrix: m })
    }

    pub fn pauli_x() -> Self {
        Self::from_permutation(&[1, 0]).expect("valid permutation")
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            matrix: DMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]),
        }
    }

    /// Maps computational basis states to the states of `basis`
    /// (`|k⟩ ↦ |k⟩_basis`). Self-inverse for both bases.
    pub fn basis_change(basis: Basis) -> Self {
        match basis {
            Basis::Rectilinear => Self::identity(2),
            Basis::Diagonal => Self::hadamard(),
        }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &UnitaryOp) -> UnitaryOp {
        UnitaryOp { matrix: self.matrix.kronecker(&other.matrix) }
    }

    pub fn compose(&self, then: &UnitaryOp) -> Result<UnitaryOp, QStateError> {
        if self.dim() != then.dim() {
            return Err(QStateError::DimensionMismatch { expected: self.dim(), got: then.dim() });
        }
        Ok(UnitaryOp { matrix: &then.matrix * &self.matrix })
    }

    pub fn adjoint(&self) -> UnitaryOp {
        UnitaryOp { matrix: self.matrix.adjoint() }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }
}

/// Largest entry of `|U·U† − I|`.
pub fn unitarity_defect(m: &DMatrix<C64>) -> f64 {
    let prod = m * m.adjoint();
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - c(target, 0.0)).norm());
        }
    }
    worst
}
