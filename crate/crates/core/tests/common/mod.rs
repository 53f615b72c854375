//! Brute-force oracles shared by the integration tests. None of them call
//! the library routines they are used to check.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;

use qbc_core::attacks::PurifiedProtocol;
use qbc_core::qstate::{Bipartition, RegisterMap, StateVector, UnitaryOp};
use qbc_core::random::{random_state, random_unitary};
use qbc_core::SimRng;

pub fn cis(a: f64) -> C64 {
    C64::from_polar(1.0, a)
}

/// `[[cos t e^{ia}, −sin t e^{−ib}], [sin t e^{ib}, cos t e^{−ia}]]`; every
/// element of SU(2) has this form.
pub fn su2(t: f64, a: f64, b: f64) -> DMatrix<C64> {
    let (s, c) = t.sin_cos();
    DMatrix::from_row_slice(2, 2, &[cis(a) * c, -cis(-b) * s, cis(b) * s, cis(-a) * c])
}

/// Grid search followed by compass-search refinement; maximises `f`.
pub fn maximise<F: Fn(&[f64]) -> f64>(f: F, ranges: &[(f64, f64)], grid: usize) -> f64 {
    let dims = ranges.len();
    let steps: Vec<f64> = ranges.iter().map(|(lo, hi)| (hi - lo) / grid as f64).collect();
    let mut best = vec![0.0; dims];
    let mut best_val = f64::NEG_INFINITY;
    let total = grid.pow(dims as u32);
    let mut p = vec![0.0; dims];
    for k in 0..total {
        let mut r = k;
        for d in 0..dims {
            p[d] = ranges[d].0 + (r % grid) as f64 * steps[d];
            r /= grid;
        }
        let v = f(&p);
        if v > best_val {
            best_val = v;
            best.clone_from(&p);
        }
    }
    let mut step = steps.iter().cloned().fold(0.0, f64::max);
    while step > 1e-10 {
        let mut improved = false;
        for d in 0..dims {
            for sign in [1.0, -1.0] {
                let mut q = best.clone();
                q[d] += sign * step;
                let v = f(&q);
                if v > best_val {
                    best_val = v;
                    best = q;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    best_val
}

/// `max_U |⟨target|(U ⊗ I)|source⟩|` over single-qubit side-A unitaries.
pub fn brute_force_overlap(source: &StateVector, target: &StateVector, bip: &Bipartition) -> f64 {
    let ms = source.bipartite_matrix(bip).unwrap();
    let mt = target.bipartite_matrix(bip).unwrap();
    assert_eq!(ms.nrows(), 2, "oracle covers a one-qubit side A");
    let f = |p: &[f64]| (mt.adjoint() * su2(p[0], p[1], p[2]) * &ms).trace().norm();
    maximise(f, &[(0.0, PI / 2.0), (0.0, 2.0 * PI), (0.0, 2.0 * PI)], 24)
}

/// `‖M₀ M₁†‖₁` from the coefficient matrices, via SVD.
pub fn fidelity_via_svd(s0: &StateVector, s1: &StateVector, bip: &Bipartition) -> f64 {
    let m0 = s0.bipartite_matrix(bip).unwrap();
    let m1 = s1.bipartite_matrix(bip).unwrap();
    (m0 * m1.adjoint()).singular_values().iter().sum()
}

/// Minimum error over projective qubit measurements `(I + n·σ)/2`, with the
/// trivial "always guess" measurements included.
pub fn brute_force_helstrom(rho0: &DMatrix<C64>, rho1: &DMatrix<C64>, prior0: f64) -> f64 {
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let error = |p: &[f64]| {
        let (st, ct) = p[0].sin_cos();
        let (sp, cp) = p[1].sin_cos();
        let (nx, ny, nz) = (st * cp, st * sp, ct);
        let proj = DMatrix::from_row_slice(
            2,
            2,
            &[(one * (1.0 + nz)) * 0.5, (one * nx - i * ny) * 0.5, (one * nx + i * ny) * 0.5, (one * (1.0 - nz)) * 0.5],
        );
        let guess1 = DMatrix::<C64>::identity(2, 2) - &proj;
        prior0 * (rho0 * guess1).trace().re + (1.0 - prior0) * (rho1 * proj).trace().re
    };
    let best = -maximise(|p| -error(p), &[(0.0, PI), (0.0, 2.0 * PI)], 48);
    best.min(prior0).min(1.0 - prior0)
}

pub fn layout_ab(wa: usize, wb: usize) -> RegisterMap {
    RegisterMap::new(&[("a", wa), ("b", wb)]).unwrap()
}

pub fn bip_ab() -> Bipartition {
    Bipartition::new(&["a"], &["b"])
}

/// A random purified protocol on `a ⊗ b`. With `equal_b` the bit-1 unitary
/// is the bit-0 one followed by a random side-A unitary, so Bob's reduced
/// states coincide.
pub fn random_protocol(seed: u64, wa: usize, wb: usize, equal_b: bool) -> PurifiedProtocol {
    let mut rng = SimRng::seed_from_u64(seed);
    let layout = layout_ab(wa, wb);
    let dim = layout.dim();
    let initial = random_state(layout, &mut rng);
    let u0 = random_unitary(dim, &mut rng);
    let u1 = if equal_b {
        let v = random_unitary(1 << wa, &mut rng).kron(&UnitaryOp::identity(1 << wb));
        u0.compose(&v).unwrap()
    } else {
        random_unitary(dim, &mut rng)
    };
    PurifiedProtocol::new(initial, u0, u1, bip_ab()).unwrap()
}
