use proptest::prelude::*;
use rand::SeedableRng;

use qbc_core::analysis::schmidt_decompose;
use qbc_core::protocols::{BobMode, Event, HonestKentAlice, KentParams, KentSession, Party, Transcript};
use qbc_core::qstate::{fidelity, trace_distance, Basis, Bipartition, DensityMatrix, RegisterMap};
use qbc_core::random::{random_density, random_state, random_unitary};
use qbc_core::SimRng;

fn layout(wa: usize, wb: usize) -> RegisterMap {
    RegisterMap::new(&[("a", wa), ("b", wb)]).unwrap()
}

fn honest_transcript(seed: u64, bit: bool) -> Transcript {
    let params = KentParams::new(6, 3, 2, seed).unwrap();
    let mut s = KentSession::new(params, HonestKentAlice::new(), BobMode::Deferred).unwrap();
    assert!(s.commit_phase().unwrap());
    s.test_phase().unwrap();
    s.mask_phase(bit).unwrap();
    s.open_phase(bit).unwrap();
    s.into_transcript()
}

fn max_abs_diff(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    (a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn bases(bits: u8, n: usize) -> Vec<Basis> {
    (0..n).map(|i| Basis::from_bit(bits >> i & 1 == 1)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unitaries_preserve_norm(seed: u64, wa in 1usize..4, wb in 1usize..4, on_b: bool) {
        let mut rng = SimRng::seed_from_u64(seed);
        let s = random_state(layout(wa, wb), &mut rng);
        let (target, w) = if on_b { ("b", wb) } else { ("a", wa) };
        let u = random_unitary(1 << w, &mut rng);
        let t = s.apply_unitary(&u, &[target]).unwrap();
        prop_assert!((t.norm() - 1.0).abs() < 1e-9);
        let back = t.apply_unitary(&u.adjoint(), &[target]).unwrap();
        prop_assert!((back.inner(&s).unwrap().norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn measurement_is_complete(seed: u64, wa in 1usize..6, wb in 1usize..5, basis_bits: u8) {
        let mut rng = SimRng::seed_from_u64(seed);
        let s = random_state(layout(wa, wb), &mut rng);
        let bs = bases(basis_bits, wa);
        let probs = s.outcome_probabilities(&["a"], &bs).unwrap();
        prop_assert_eq!(probs.len(), 1 << wa);
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(probs.iter().all(|&p| p >= -1e-12));
        let m = s.measure(&["a"], &bs, &mut rng).unwrap();
        prop_assert!((m.probability - probs[m.outcome.value() as usize]).abs() < 1e-9);
        prop_assert!((m.post_state.norm() - 1.0).abs() < 1e-9);
        // Measuring again in the same bases repeats the outcome.
        let again = m.post_state.outcome_probabilities(&["a"], &bs).unwrap();
        prop_assert!((again[m.outcome.value() as usize] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn partial_traces_compose(seed: u64, w1 in 1usize..3, w2 in 1usize..3, w3 in 1usize..3) {
        let mut rng = SimRng::seed_from_u64(seed);
        let l = RegisterMap::new(&[("p", w1), ("q", w2), ("r", w3)]).unwrap();
        let s = random_state(l, &mut rng);
        let direct = s.partial_trace(&["p"]).unwrap();
        let staged = s.partial_trace(&["p", "q"]).unwrap().partial_trace(&["p"]).unwrap();
        let via_density = DensityMatrix::from_pure(&s).partial_trace(&["p"]).unwrap();
        prop_assert!(max_abs_diff(&direct, &staged) < 1e-9);
        prop_assert!(max_abs_diff(&direct, &via_density) < 1e-9);
        prop_assert!((direct.matrix().trace().re - 1.0).abs() < 1e-9);
        prop_assert!(direct.eigenvalues().iter().all(|&l| l > -1e-9));
    }

    #[test]
    fn reduced_spectra_agree(seed: u64, wa in 1usize..4, wb in 1usize..4) {
        let mut rng = SimRng::seed_from_u64(seed);
        let s = random_state(layout(wa, wb), &mut rng);
        let mut ea = s.partial_trace(&["a"]).unwrap().eigenvalues();
        let mut eb = s.partial_trace(&["b"]).unwrap().eigenvalues();
        ea.sort_by(|x, y| y.total_cmp(x));
        eb.sort_by(|x, y| y.total_cmp(x));
        let k = ea.len().min(eb.len());
        for i in 0..k {
            prop_assert!((ea[i] - eb[i]).abs() < 1e-9);
        }
        prop_assert!(ea[k..].iter().chain(&eb[k..]).all(|l| l.abs() < 1e-9));
        let sd = schmidt_decompose(&s, &Bipartition::new(&["a"], &["b"])).unwrap();
        for (i, l) in sd.coefficients.iter().enumerate() {
            prop_assert!((l - ea[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn fuchs_van_de_graaf(seed: u64, dim in 2usize..5, r0 in 1usize..5, r1 in 1usize..5) {
        let mut rng = SimRng::seed_from_u64(seed);
        let a = random_density(dim, r0.min(dim), &mut rng).unwrap();
        let b = random_density(dim, r1.min(dim), &mut rng).unwrap();
        let d = trace_distance(&a, &b).unwrap();
        let f = fidelity(&a, &b).unwrap();
        prop_assert!(1.0 - f <= d + 1e-7);
        prop_assert!(d <= (1.0 - f * f).max(0.0).sqrt() + 1e-7);
    }

    #[test]
    fn sessions_are_deterministic(seed: u64, bit: bool) {
        let a = honest_transcript(seed, bit);
        let b = honest_transcript(seed, bit);
        prop_assert_eq!(a.to_jsonl(), b.to_jsonl());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dropped_events_are_caught_where_they_were(seed: u64, bit: bool, pick: prop::sample::Index) {
        let mut t = honest_transcript(seed, bit);
        prop_assert!(t.validate().is_ok() && t.is_complete());
        let n = t.events.len();
        let p = pick.index(n - 1);
        t.events.remove(p);
        let v = t.validate().unwrap_err();
        prop_assert_eq!(v.position, p);
        prop_assert_eq!(v.violator, t.events[p].sender());
    }

    #[test]
    fn swapped_events_blame_the_mover(seed: u64, bit: bool, i: prop::sample::Index, j: prop::sample::Index) {
        let mut t = honest_transcript(seed, bit);
        let n = t.events.len();
        let (i, j) = (i.index(n), j.index(n));
        prop_assume!(i != j);
        let (lo, hi) = (i.min(j), i.max(j));
        t.events.swap(lo, hi);
        let v = t.validate().unwrap_err();
        prop_assert_eq!(v.position, lo);
        prop_assert_eq!(v.violator, t.events[lo].sender());
    }

    #[test]
    fn injected_events_blame_their_sender(seed: u64, bit: bool, src: prop::sample::Index, at: prop::sample::Index) {
        let mut t = honest_transcript(seed, bit);
        let n = t.events.len();
        let e = t.events[src.index(n)].clone();
        let p = at.index(n + 1);
        prop_assume!(p == n || e.kind() != t.events[p].kind());
        let sender = e.sender();
        t.events.insert(p, e);
        let v = t.validate().unwrap_err();
        prop_assert_eq!(v.position, p);
        prop_assert_eq!(v.violator, sender);
    }

    #[test]
    fn an_abort_may_end_any_prefix(seed: u64, bit: bool, cut: prop::sample::Index, bob: bool) {
        let mut t = honest_transcript(seed, bit);
        let p = cut.index(t.events.len());
        t.events.truncate(p);
        prop_assert!(t.validate().is_ok());
        let violator = if bob { Party::Bob } else { Party::Alice };
        t.events.push(Event::Abort { violator, reason: "stop".into() });
        prop_assert!(t.is_complete());
        t.events.push(Event::Sample { indices: vec![] });
        let v = t.validate().unwrap_err();
        prop_assert_eq!(v.position, p + 1);
    }
}
