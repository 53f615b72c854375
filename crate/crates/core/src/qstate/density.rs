use nalgebra::DMatrix;

use super::{c, QStateError, RegisterMap, StateVector, C64, STRUCTURAL_TOL};

/// Hermitian, unit-trace, positive semidefinite matrix.
///
/// Carries the register layout when it was derived from a [`StateVector`],
/// which is what [`partial_trace`](Self::partial_trace) needs.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
    layout: Option<RegisterMap>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (all within 1e-9).
    pub fn new(matrix: DMatrix<C64>) -> Result<Self, QStateError> {
        Self::with_layout(matrix, None)
    }

    pub fn with_layout(matrix: DMatrix<C64>, layout: Option<RegisterMap>) -> Result<Self, QStateError> {
        if !matrix.is_square() {
            return Err(QStateError::NotSquare(matrix.nrows(), matrix.ncols()));
        }
        if let Some(l) = &layout {
            if l.dim() != matrix.nrows() {
                return Err(QStateError::DimensionMismatch { expected: l.dim(), got: matrix.nrows() });
            }
        }
        let herm = (&matrix - matrix.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if herm > STRUCTURAL_TOL {
            return Err(QStateError::NotHermitian(herm));
        }
        let tr = matrix.trace();
        if (tr - c(1.0, 0.0)).norm() > STRUCTURAL_TOL {
            return Err(QStateError::BadTrace(tr.re));
        }
        let (vals, _) = hermitian_eigen(&matrix);
        if let Some(&min) = vals.last() {
            if min < -STRUCTURAL_TOL {
                return Err(QStateError::NotPositive(min));
            }
        }
        Ok(Self { matrix, layout })
    }

    pub(crate) fn from_parts(matrix: DMatrix<C64>, layout: Option<RegisterMap>) -> Self {
        Self { matrix, layout }
    }

    pub fn from_pure(s: &StateVector) -> Self {
        let v = s.amplitudes();
        Self { matrix: v * v.adjoint(), layout: Some(s.layout().clone()) }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: DMatrix::identity(dim, dim).unscale(dim as f64), layout: None }
    }

    /// Convex combination `Σ p_k ρ_k`; weights must sum to 1.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self, QStateError> {
        let first = parts.first().ok_or(QStateError::EmptySelection)?.1;
        let dim = first.dim();
        let mut acc = DMatrix::zeros(dim, dim);
        for (p, rho) in parts {
            if rho.dim() != dim {
                return Err(QStateError::DimensionMismatch { expected: dim, got: rho.dim() });
            }
            acc += rho.matrix.scale(*p);
        }
        Self::with_layout(acc, first.layout.clone())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn layout(&self) -> Option<&RegisterMap> {
        self.layout.as_ref()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Reduced state on `keep`; requires a known layout.
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<DensityMatrix, QStateError> {
        let layout = self.layout.as_ref().ok_or(QStateError::MissingLayout)?;
        if keep.is_empty() {
            return Err(QStateError::EmptySelection);
        }
        let names: Vec<String> = keep.iter().map(|s| s.as_ref().to_string()).collect();
        let rest = layout.complement(&names);
        let k_off = layout.scatter_table(&layout.qubits_of_all(&names)?);
        let r_off = layout.scatter_table(&layout.qubits_of_all(&rest)?);
        let m = DMatrix::from_fn(k_off.len(), k_off.len(), |i, j| {
            r_off.iter().map(|r| self.matrix[(k_off[i] | r, k_off[j] | r)]).sum::<C64>()
        });
        Ok(DensityMatrix { matrix: m, layout: Some(layout.sublayout(&names)?) })
    }
}

/// Eigen-decomposition of a Hermitian matrix: eigenvalues in descending order
/// and the matching eigenvectors as columns.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Principal square root of a PSD matrix. Negative eigenvalues are clamped
/// to zero; clamps larger than 1e-9 are logged.
pub fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(m);
    let clamped = vals.iter().copied().filter(|&v| v < 0.0).fold(0.0f64, |a, v| a.max(-v));
    if clamped > STRUCTURAL_TOL {
        log::warn!("psd_sqrt clamped a negative eigenvalue of magnitude {clamped:e}");
    }
    let n = m.nrows();
    let mut scaled = vecs.clone();
    for (j, v) in vals.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    &scaled * vecs.adjoint()
}

/// `½ Σ |eig(r0 − r1)|`.
pub fn trace_distance(r0: &DensityMatrix, r1: &DensityMatrix) -> Result<f64, QStateError> {
    if r0.dim() != r1.dim() {
        return Err(QStateError::DimensionMismatch { expected: r0.dim(), got: r1.dim() });
    }
    Ok(0.5 * trace_norm(&(r0.matrix() - r1.matrix())))
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &DMatrix<C64>) -> f64 {
    hermitian_eigen(m).0.iter().map(|v| v.abs()).sum()
}

/// Uhlmann fidelity `‖√r0 √r1‖₁`, normalised so that two pure states give
/// `|⟨ψ|φ⟩|` (not squared).
pub fn fidelity(r0: &DensityMatrix, r1: &DensityMatrix) -> Result<f64, QStateError> {
    if r0.dim() != r1.dim() {
        return Err(QStateError::DimensionMismatch { expected: r0.dim(), got: r1.dim() });
    }
    let prod = support_sqrt(r0.matrix()) * support_sqrt(r1.matrix());
    let f: f64 = prod.singular_values().iter().sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Square root keeping only eigenvalues above rounding noise. Taking the
/// root of a `1e-17` noise eigenvalue would otherwise contribute `~3e-9`.
fn support_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    const NOISE: f64 = 1e-14;
    let (vals, vecs) = hermitian_eigen(m);
    let n = m.nrows();
    let mut scaled = vecs.clone();
    for (j, v) in vals.iter().enumerate() {
        let s = if *v > NOISE { v.sqrt() } else { 0.0 };
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    &scaled * vecs.adjoint()
}
