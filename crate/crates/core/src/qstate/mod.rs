//! Dense simulation of multi-register pure states and density matrices.
//!
//! Everything here is exact linear algebra over `Complex64`. Values are
//! immutable; operations return new states. Randomness enters only through
//! an explicitly passed generator in [`StateVector::measure`].

mod density;
mod register;
mod state;
mod unitary;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use density::{fidelity, hermitian_eigen, psd_sqrt, trace_distance, trace_norm, DensityMatrix};
pub use register::{Bipartition, Register, RegisterMap};
pub use state::{Measurement, StateVector};
pub use unitary::{unitarity_defect, UnitaryOp};

pub type C64 = num_complex::Complex64;

/// Tolerance for structural checks: norms, traces, Hermiticity, unitarity.
pub const STRUCTURAL_TOL: f64 = 1e-9;
/// Tolerance for comparisons that go through a spectral function.
pub const SPECTRAL_TOL: f64 = 1e-7;
/// Largest system the dense representation accepts.
pub const MAX_QUBITS: usize = 20;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QStateError {
    #[error("duplicate register name {0:?}")]
    DuplicateRegister(String),
    #[error("unknown register {0:?}")]
    UnknownRegister(String),
    #[error("register {0:?} has zero width")]
    EmptyRegister(String),
    #[error("layout has no qubits")]
    EmptyLayout,
    #[error("{0} qubits exceed the dense simulation limit")]
    TooManyQubits(usize),
    #[error("empty register selection")]
    EmptySelection,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("register layouts differ")]
    LayoutMismatch,
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("matrix is {0}x{1}, not square")]
    NotSquare(usize, usize),
    #[error("matrix is not unitary (max |UU†−I| = {0:e})")]
    NotUnitary(f64),
    #[error("table is not a permutation")]
    NotPermutation,
    #[error("matrix is not Hermitian (max |ρ−ρ†| = {0:e})")]
    NotHermitian(f64),
    #[error("trace {0} differs from 1")]
    BadTrace(f64),
    #[error("matrix has negative eigenvalue {0:e}")]
    NotPositive(f64),
    #[error("expected {expected} bases, got {got}")]
    BasisCount { expected: usize, got: usize },
    #[error("density matrix has no register layout")]
    MissingLayout,
    #[error("invalid bipartition: {0}")]
    BadBipartition(String),
}

/// Measurement / preparation basis for a single qubit.
///
/// Diagonal states follow `|0⟩× = (|0⟩+|1⟩)/√2`, `|1⟩× = (|0⟩−|1⟩)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Rectilinear,
    Diagonal,
}

impl Basis {
    /// `{+, ×}` selected by a bit: `false` → rectilinear, `true` → diagonal.
    pub fn from_bit(x: bool) -> Self {
        if x {
            Basis::Diagonal
        } else {
            Basis::Rectilinear
        }
    }

    pub fn bit(self) -> bool {
        self == Basis::Diagonal
    }

    pub fn other(self) -> Self {
        Self::from_bit(!self.bit())
    }

    /// Amplitudes of `|bit⟩` in this basis, written in the computational basis.
    pub fn ket(self, bit: bool) -> [C64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match (self, bit) {
            (Basis::Rectilinear, false) => [c(1.0, 0.0), c(0.0, 0.0)],
            (Basis::Rectilinear, true) => [c(0.0, 0.0), c(1.0, 0.0)],
            (Basis::Diagonal, false) => [c(h, 0.0), c(h, 0.0)],
            (Basis::Diagonal, true) => [c(h, 0.0), c(-h, 0.0)],
        }
    }
}

/// BB84 coding `Ψ(x, z)`: bit `z` encoded in the basis selected by `x`,
/// held in a one-qubit register called `name`.
pub fn bb84_state(name: &str, x: bool, z: bool) -> Result<StateVector, QStateError> {
    StateVector::qubit(name, Basis::from_bit(x), z)
}
