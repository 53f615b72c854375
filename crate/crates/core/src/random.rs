//! Seeded random instances: Haar-like states and unitaries, mixed states.
//!
//! Used to synthesise test and benchmark instances; none of the protocol
//! code depends on this module.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::qstate::{c, DensityMatrix, QStateError, RegisterMap, StateVector, UnitaryOp, C64};

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Uniformly distributed pure state over `layout`.
pub fn random_state<R: Rng + ?Sized>(layout: RegisterMap, rng: &mut R) -> StateVector {
    let amps = (0..layout.dim()).map(|_| gaussian_complex(rng)).collect();
    StateVector::normalized(layout, amps).expect("gaussian vector is nonzero")
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix with the
/// phase correction on the diagonal of R.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitaryOp {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    UnitaryOp::new(q).expect("QR factor is unitary")
}

/// Random mixed state of the given rank: partial trace of a random pure
/// state on `dim × rank`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Result<DensityMatrix, QStateError> {
    let g = DMatrix::from_fn(dim, rank.max(1), |_, _| gaussian_complex(rng));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.unscale(tr))
}
