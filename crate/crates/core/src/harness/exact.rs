//! Exact enumeration of what Bob sees before the open phase.
//!
//! Photons are independent given Bob's sample, so each photon contributes a
//! small list of [`View`]s: a classical key (what the transcript says about
//! it), its probability, and Bob's sub-normalised density matrix for it. The
//! joint object over a whole run is a classical-quantum state
//! `Σ_t |t⟩⟨t| ⊗ p(t) ρ(t)`, held as a map from transcript key to weighted
//! matrix. Only Bob's photons that are still unmeasured enter `ρ(t)`; a
//! tested photon has been measured and its state is a function of `t`.
//!
//! Every probability on the attack side comes from projecting the simulated
//! state, not from a formula.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use rand::Rng;

use super::config::{AliceChoice, ExperimentConfig, KentShape, ProbeVariant, ProtocolChoice};
use super::HarnessError;
use crate::attacks::{bell_pair, prepare_gamma, R_AZ, R_BZ, R_F, R_W};
use crate::bits::BitString;
use crate::oneway::PermutationFamily;
use crate::protocols::{family_for, Event, ProtocolKind, Transcript};
use crate::qstate::{bb84_state, c, trace_norm, Basis, DensityMatrix, StateVector, C64};
use crate::SimRng;

/// Largest photon count enumerated exhaustively.
pub const MAX_EXACT_PHOTONS: usize = 4;
/// Largest per-photon system (in qubits) enumerated exhaustively.
pub const MAX_EXACT_QUBITS: usize = 12;

/// What the pre-open transcript says about one photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PhotonKey {
    /// Only the commitment is on record: the run ended at an earlier check.
    Committed { y: u64 },
    Tested { y: u64, x: bool, z: bool, w: u64, passed: bool },
    Retained { y: u64, mask: bool, leaked_z: Option<bool> },
    /// A BB84 photon; nothing classical is sent before the opening.
    Sent { leaked_z: Option<bool> },
}

impl PhotonKey {
    fn y(&self) -> Option<u64> {
        match *self {
            PhotonKey::Committed { y } | PhotonKey::Tested { y, .. } | PhotonKey::Retained { y, .. } => Some(y),
            PhotonKey::Sent { .. } => None,
        }
    }
}

/// Pre-open transcript content: Bob's sample and one key per photon.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TranscriptKey {
    pub sample: Vec<usize>,
    pub photons: Vec<PhotonKey>,
}

/// One photon's contribution: key, probability, and (for photons Bob still
/// holds) his density matrix scaled by that probability.
#[derive(Debug, Clone)]
pub struct View {
    pub key: PhotonKey,
    pub weight: f64,
    pub bob: Option<DMatrix<C64>>,
}

fn merge(views: Vec<View>) -> Vec<View> {
    let mut out: Vec<View> = Vec::new();
    let mut slot: HashMap<PhotonKey, usize> = HashMap::new();
    for v in views {
        if v.weight <= 0.0 {
            continue;
        }
        match slot.get(&v.key) {
            Some(&i) => {
                out[i].weight += v.weight;
                if let (Some(acc), Some(m)) = (out[i].bob.as_mut(), v.bob.as_ref()) {
                    *acc += m;
                }
            }
            None => {
                slot.insert(v.key, out.len());
                out.push(v);
            }
        }
    }
    out
}

fn projector(s: &StateVector) -> DMatrix<C64> {
    DensityMatrix::from_pure(s).matrix().clone()
}

fn rect(n: usize) -> Vec<Basis> {
    vec![Basis::Rectilinear; n]
}

/// Honest Kent-style Alice committing `bit`.
pub fn honest_kent_views(fam: &PermutationFamily, bit: bool, tested: bool, leak: bool) -> Result<Vec<View>, HarnessError> {
    let n = fam.width();
    let p0 = 1.0 / (4.0 * (1u64 << n) as f64);
    let mut views = Vec::new();
    for x in [false, true] {
        for z in [false, true] {
            let psi = bb84_state(R_BZ, x, z)?;
            for wv in 0..1u64 << n {
                let w = BitString::new(wv, n).expect("fits");
                let y = fam.eval(x, z, &w)?.value();
                if tested {
                    let probs = psi.outcome_probabilities(&[R_BZ], &[Basis::from_bit(x)])?;
                    for (o, p) in probs.into_iter().enumerate() {
                        let passed = (o == 1) == z;
                        views.push(View { key: PhotonKey::Tested { y, x, z, w: wv, passed }, weight: p0 * p, bob: None });
                    }
                } else {
                    let key = PhotonKey::Retained { y, mask: x ^ bit, leaked_z: leak.then_some(z) };
                    views.push(View { key, weight: p0, bob: Some(projector(&psi).scale(p0)) });
                }
            }
        }
    }
    Ok(merge(views))
}

/// Kent attacker with masks `θ ⊕ bit`; every weight is a Born probability of
/// the simulated entangled system.
pub fn attack_kent_views(fam: &PermutationFamily, bit: bool, tested: bool, leak: bool) -> Result<Vec<View>, HarnessError> {
    let n = fam.width();
    let mut views = Vec::new();
    for theta in [Basis::Rectilinear, Basis::Diagonal] {
        let g = prepare_gamma(fam, theta)?;
        for yv in 0..1u64 << n {
            let (p, post) = g.state().project(&[R_F], &rect(n), &BitString::new(yv, n).expect("fits"))?;
            let Some(post) = post else { continue };
            let wy = 0.5 * p;
            if tested {
                let mut bases = rect(n);
                bases.push(theta);
                for k in 0..2u64 << n {
                    let outcome = BitString::new(k, n + 1).expect("fits");
                    let (q, after) = post.project(&[R_W, R_AZ], &bases, &outcome)?;
                    let Some(after) = after else { continue };
                    let (w, z) = outcome.split(n);
                    let z = z.bit(0);
                    let probs = after.outcome_probabilities(&[R_BZ], &[theta])?;
                    for (o, pb) in probs.into_iter().enumerate() {
                        let key = PhotonKey::Tested { y: yv, x: theta.bit(), z, w: w.value(), passed: (o == 1) == z };
                        views.push(View { key, weight: wy * q * pb, bob: None });
                    }
                }
            } else if leak {
                for z in [false, true] {
                    let (q, after) = post.project(&[R_AZ], &[theta], &BitString::from_bits(&[z]))?;
                    let Some(after) = after else { continue };
                    let rho = after.partial_trace(&[R_BZ])?;
                    let key = PhotonKey::Retained { y: yv, mask: theta.bit() ^ bit, leaked_z: Some(z) };
                    views.push(View { key, weight: wy * q, bob: Some(rho.matrix().scale(wy * q)) });
                }
            } else {
                let rho = post.partial_trace(&[R_BZ])?;
                let key = PhotonKey::Retained { y: yv, mask: theta.bit() ^ bit, leaked_z: None };
                views.push(View { key, weight: wy, bob: Some(rho.matrix().scale(wy)) });
            }
        }
    }
    Ok(merge(views))
}

/// Honest BB84 Alice committing `bit`, or the EPR attacker (who, in the leaky
/// variant, measures her half in the basis of `bit` to have a `z` to leak).
pub fn bb84_views(alice: AliceChoice, bit: bool, leak: bool) -> Result<Vec<View>, HarnessError> {
    let mut views = Vec::new();
    match alice {
        AliceChoice::Honest => {
            for z in [false, true] {
                let psi = bb84_state(R_BZ, bit, z)?;
                views.push(View { key: PhotonKey::Sent { leaked_z: leak.then_some(z) }, weight: 0.5, bob: Some(projector(&psi).scale(0.5)) });
            }
        }
        AliceChoice::Attack => {
            let pair = bell_pair();
            if leak {
                for z in [false, true] {
                    let (q, after) = pair.project(&[R_AZ], &[Basis::from_bit(bit)], &BitString::from_bits(&[z]))?;
                    let Some(after) = after else { continue };
                    let rho = after.partial_trace(&[R_BZ])?;
                    views.push(View { key: PhotonKey::Sent { leaked_z: Some(z) }, weight: q, bob: Some(rho.matrix().scale(q)) });
                }
            } else {
                let rho = pair.partial_trace(&[R_BZ])?;
                views.push(View { key: PhotonKey::Sent { leaked_z: None }, weight: 1.0, bob: Some(rho.matrix().clone()) });
            }
        }
    }
    Ok(merge(views))
}

/// `Σ_t |t⟩⟨t| ⊗ p(t) ρ(t)` over pre-open transcripts.
#[derive(Debug, Clone, Default)]
pub struct CqState {
    entries: BTreeMap<TranscriptKey, (f64, Option<DMatrix<C64>>)>,
}

impl CqState {
    fn add(&mut self, key: TranscriptKey, weight: f64, bob: Option<DMatrix<C64>>) {
        match self.entries.get_mut(&key) {
            Some((w, m)) => {
                *w += weight;
                if let (Some(acc), Some(b)) = (m.as_mut(), bob.as_ref()) {
                    *acc += b;
                }
            }
            None => {
                self.entries.insert(key, (weight, bob));
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.values().map(|(w, _)| w).sum()
    }

    pub fn probability(&self, key: &TranscriptKey) -> f64 {
        self.entries.get(key).map_or(0.0, |(w, _)| *w)
    }

    /// The classical marginal: transcript distribution.
    pub fn classical(&self) -> BTreeMap<TranscriptKey, f64> {
        self.entries.iter().map(|(k, (w, _))| (k.clone(), *w)).collect()
    }
}

/// `½ Σ_t |p(t) − q(t)|`.
pub fn statistical_distance(p: &BTreeMap<TranscriptKey, f64>, q: &BTreeMap<TranscriptKey, f64>) -> f64 {
    let mut total = 0.0;
    for (k, a) in p {
        total += (a - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, b) in q {
        if !p.contains_key(k) {
            total += b.abs();
        }
    }
    0.5 * total
}

/// Trace distance of two classical-quantum states:
/// `½ Σ_t ‖p(t)ρ(t) − q(t)σ(t)‖₁`.
pub fn cq_trace_distance(a: &CqState, b: &CqState) -> f64 {
    let norm = |x: Option<&(f64, Option<DMatrix<C64>>)>, y: Option<&(f64, Option<DMatrix<C64>>)>| -> f64 {
        match (x, y) {
            (Some((_, Some(m))), Some((_, Some(n)))) => trace_norm(&(m - n)),
            (Some((_, Some(m))), None) | (None, Some((_, Some(m)))) => trace_norm(m),
            (Some((w, _)), Some((v, _))) => (w - v).abs(),
            (Some((w, _)), None) | (None, Some((w, _))) => w.abs(),
            (None, None) => 0.0,
        }
    };
    let mut total = 0.0;
    for (k, x) in &a.entries {
        total += norm(Some(x), b.entries.get(k));
    }
    for (k, y) in &b.entries {
        if !a.entries.contains_key(k) {
            total += norm(None, Some(y));
        }
    }
    0.5 * total
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Rewrites the photon keys of a run whose test stopped at a failed check:
/// later tested photons and every retained photon show only their `y`.
fn truncate_after_failure(sample: &[usize], keys: &mut [PhotonKey]) {
    let failed = sample.iter().copied().find(|&i| matches!(keys[i], PhotonKey::Tested { passed: false, .. }));
    if let Some(f) = failed {
        for (i, k) in keys.iter_mut().enumerate() {
            let later_test = sample.contains(&i) && i > f;
            if later_test || !sample.contains(&i) {
                *k = PhotonKey::Committed { y: k.y().expect("kent keys carry y") };
            }
        }
    }
}

fn check_size(photons: usize, qubits: usize) -> Result<(), HarnessError> {
    if photons > MAX_EXACT_PHOTONS || qubits > MAX_EXACT_QUBITS {
        return Err(HarnessError::TooLarge(format!(
            "exact enumeration supports at most {MAX_EXACT_PHOTONS} photons of at most {MAX_EXACT_QUBITS} qubits \
             (got {photons} photons of {qubits} qubits); run a Monte-Carlo experiment instead"
        )));
    }
    Ok(())
}

fn views_for(alice: AliceChoice, fam: &PermutationFamily, bit: bool, tested: bool, leak: bool) -> Result<Vec<View>, HarnessError> {
    match alice {
        AliceChoice::Honest => honest_kent_views(fam, bit, tested, leak),
        AliceChoice::Attack => attack_kent_views(fam, bit, tested, leak),
    }
}

/// Exact pre-open state of a Kent-style run with `total` photons of which
/// `retained` survive the test. Set `quantum` to false to skip Bob's
/// matrices when only the transcript distribution is needed.
pub fn kent_cq_state(
    fam: &PermutationFamily,
    total: usize,
    retained: usize,
    alice: AliceChoice,
    bit: bool,
    leak: bool,
    quantum: bool,
) -> Result<CqState, HarnessError> {
    let qubits = match alice {
        AliceChoice::Honest => 1,
        AliceChoice::Attack => 2 * fam.width() + 2,
    };
    check_size(total, qubits)?;
    if retained == 0 || retained >= total {
        return Err(HarnessError::Config { field: "kent".into(), message: "need 0 < retained < total".into() });
    }
    let strip = |vs: Vec<View>| -> Vec<View> {
        vs.into_iter().map(|v| View { bob: if quantum { v.bob } else { None }, ..v }).collect()
    };
    let tested_views = views_for(alice, fam, bit, true, leak)?;
    let kept_views = strip(views_for(alice, fam, bit, false, leak)?);
    let p_sample = 1.0 / binomial(total, total - retained);
    let mut state = CqState::default();
    for sample in subsets(total, total - retained) {
        let lists: Vec<&[View]> = (0..total)
            .map(|i| if sample.contains(&i) { tested_views.as_slice() } else { kept_views.as_slice() })
            .collect();
        let mut choice = vec![0usize; total];
        'outer: loop {
            let mut keys: Vec<PhotonKey> = (0..total).map(|i| lists[i][choice[i]].key).collect();
            let mut weight = p_sample;
            let mut bob: Option<DMatrix<C64>> = quantum.then(|| DMatrix::from_element(1, 1, c(1.0, 0.0)));
            for i in 0..total {
                let v = &lists[i][choice[i]];
                match (&v.bob, bob.as_mut()) {
                    (Some(m), Some(acc)) => *acc = acc.kronecker(m),
                    _ => weight *= v.weight,
                }
            }
            if let Some(acc) = bob.as_mut() {
                *acc *= c(weight, 0.0);
                weight = acc.trace().re;
            }
            truncate_after_failure(&sample, &mut keys);
            state.add(TranscriptKey { sample: sample.clone(), photons: keys }, weight, bob);
            for i in (0..total).rev() {
                choice[i] += 1;
                if choice[i] < lists[i].len() {
                    continue 'outer;
                }
                choice[i] = 0;
            }
            break;
        }
    }
    Ok(state)
}

/// Exact pre-open state of a BB84 run with `photons` photons.
pub fn bb84_cq_state(photons: usize, alice: AliceChoice, bit: bool, leak: bool) -> Result<CqState, HarnessError> {
    check_size(photons, if alice == AliceChoice::Attack { 2 } else { 1 })?;
    let views = bb84_views(alice, bit, leak)?;
    let mut state = CqState::default();
    let mut choice = vec![0usize; photons];
    'outer: loop {
        let mut bob = DMatrix::from_element(1, 1, c(1.0, 0.0));
        for &k in &choice {
            bob = bob.kronecker(views[k].bob.as_ref().expect("bb84 views carry Bob's photon"));
        }
        let keys = choice.iter().map(|&k| views[k].key).collect();
        let weight = bob.trace().re;
        state.add(TranscriptKey { sample: Vec::new(), photons: keys }, weight, Some(bob));
        for i in (0..photons).rev() {
            choice[i] += 1;
            if choice[i] < views.len() {
                continue 'outer;
            }
            choice[i] = 0;
        }
        break;
    }
    Ok(state)
}

/// Distribution of Kent-style pre-open transcripts.
pub fn kent_transcript_distribution(
    fam: &PermutationFamily,
    total: usize,
    retained: usize,
    alice: AliceChoice,
    bit: bool,
) -> Result<BTreeMap<TranscriptKey, f64>, HarnessError> {
    Ok(kent_cq_state(fam, total, retained, alice, bit, false, false)?.classical())
}

/// Reads the pre-open key off a Kent-style transcript. `None` if the
/// transcript stops before the masks and no check failed.
pub fn transcript_key(t: &Transcript) -> Option<TranscriptKey> {
    if t.header.protocol != ProtocolKind::Kent {
        return None;
    }
    let total = t.header.photons;
    let ys = t.commitments();
    if ys.len() != total {
        return None;
    }
    let sample = t.sample()?.to_vec();
    let mut keys: Vec<PhotonKey> = ys.iter().map(|y| PhotonKey::Committed { y: y.value() }).collect();
    let mut pending: Option<(usize, bool, bool, u64)> = None;
    let mut failed = false;
    let mut masks = 0;
    for e in &t.events {
        match e {
            Event::TestUnveil { index, x, z, w } => pending = Some((*index, *x, *z, w.value())),
            Event::TestCheck { index, passed, .. } => {
                let (i, x, z, w) = pending.take().filter(|p| p.0 == *index)?;
                keys[i] = PhotonKey::Tested { y: ys[i].value(), x, z, w, passed: *passed };
                failed |= !passed;
            }
            Event::Mask { index, bit } => {
                keys[*index] = PhotonKey::Retained { y: ys[*index].value(), mask: *bit, leaked_z: None };
                masks += 1;
            }
            _ => {}
        }
    }
    if !failed && masks != total - sample.len() {
        return None;
    }
    Some(TranscriptKey { sample, photons: keys })
}

/// Trace distance between Bob's pre-open classical-quantum states for
/// `b = 0` and `b = 1`, for the Alice, protocol and variant in `cfg`.
/// Kent-style runs use the family of the config's first trial.
pub fn concealment_probe(cfg: &ExperimentConfig) -> Result<f64, HarnessError> {
    let leak = cfg.probe_variant == ProbeVariant::LeakZ;
    match cfg.protocol {
        ProtocolChoice::Bb84 => {
            let n = cfg.photon_count();
            let s0 = bb84_cq_state(n, cfg.alice, false, leak)?;
            let s1 = bb84_cq_state(n, cfg.alice, true, leak)?;
            Ok(cq_trace_distance(&s0, &s1))
        }
        ProtocolChoice::Kent => {
            let shape: KentShape = cfg.kent_shape();
            let fam = family_for(&shape.params(cfg.base_seed)?)?;
            let (t, r) = (shape.total_photons, shape.retained_photons);
            let s0 = kent_cq_state(&fam, t, r, cfg.alice, false, leak, true)?;
            let s1 = kent_cq_state(&fam, t, r, cfg.alice, true, leak, true)?;
            Ok(cq_trace_distance(&s0, &s1))
        }
    }
}

/// Bob's inference under the honest encoding of one commitment family:
/// per-photon likelihoods of the public data for each bit, and the
/// corresponding conditional states of his photons.
#[derive(Debug, Clone)]
pub struct HonestModel {
    likelihood: [HashMap<PhotonKey, f64>; 2],
    states: [HashMap<PhotonKey, DensityMatrix>; 2],
}

impl HonestModel {
    pub fn new(fam: &PermutationFamily) -> Result<Self, HarnessError> {
        let mut likelihood: [HashMap<PhotonKey, f64>; 2] = Default::default();
        let mut states: [HashMap<PhotonKey, DensityMatrix>; 2] = Default::default();
        for b in [false, true] {
            for v in honest_kent_views(fam, b, false, false)? {
                let m = v.bob.expect("retained views carry Bob's photon");
                states[b as usize].insert(v.key, DensityMatrix::new(m.unscale(v.weight))?);
                likelihood[b as usize].insert(v.key, v.weight);
            }
        }
        Ok(Self { likelihood, states })
    }

    fn retained_keys(t: &Transcript) -> Vec<PhotonKey> {
        let ys = t.commitments();
        t.masks()
            .into_iter()
            .map(|(i, m)| PhotonKey::Retained { y: ys[i].value(), mask: m, leaked_z: None })
            .collect()
    }

    /// Log-likelihood of the transcript's masked photons under each bit.
    /// Tested photons are independent of the bit and cancel.
    pub fn log_likelihoods(&self, t: &Transcript) -> [f64; 2] {
        let keys = Self::retained_keys(t);
        [0, 1].map(|b| keys.iter().map(|k| self.likelihood[b].get(k).map_or(f64::NEG_INFINITY, |p| p.ln())).sum())
    }

    /// Maximum-a-posteriori guess of the bit under a uniform prior, ties
    /// broken by a fair coin.
    pub fn bayes_guess(&self, t: &Transcript, rng: &mut SimRng) -> bool {
        let [l0, l1] = self.log_likelihoods(t);
        let tie = (l0 == l1) || (l0.is_finite() && l1.is_finite() && (l0 - l1).abs() <= 1e-9);
        if tie {
            rng.random()
        } else {
            l1 > l0
        }
    }

    /// Largest trace distance, over the masked photons, between Bob's
    /// conditional states of the photon under `b = 0` and `b = 1`.
    pub fn concealment(&self, t: &Transcript) -> Result<f64, HarnessError> {
        let mut worst: f64 = 0.0;
        for k in Self::retained_keys(t) {
            match (self.states[0].get(&k), self.states[1].get(&k)) {
                (Some(a), Some(b)) => worst = worst.max(crate::qstate::trace_distance(a, b)?),
                _ => worst = 1.0,
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam() -> PermutationFamily {
        PermutationFamily::generate(2, 8).unwrap()
    }

    #[test]
    fn distributions_are_normalised() {
        for alice in [AliceChoice::Honest, AliceChoice::Attack] {
            for b in [false, true] {
                let s = kent_cq_state(&fam(), 3, 2, alice, b, false, true).unwrap();
                assert!((s.total_weight() - 1.0).abs() < 1e-12);
            }
        }
        let s = bb84_cq_state(3, AliceChoice::Honest, true, true).unwrap();
        assert!((s.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subsets_count() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(subsets(3, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn size_limits_enforced() {
        let big = PermutationFamily::generate(6, 1).unwrap();
        assert!(matches!(kent_cq_state(&big, 3, 2, AliceChoice::Attack, false, false, true), Err(HarnessError::TooLarge(_))));
        assert!(matches!(kent_cq_state(&fam(), 5, 2, AliceChoice::Honest, false, false, true), Err(HarnessError::TooLarge(_))));
        assert!(matches!(bb84_cq_state(5, AliceChoice::Honest, false, false), Err(HarnessError::TooLarge(_))));
    }

    #[test]
    fn honest_model_sees_nothing() {
        let m = HonestModel::new(&fam()).unwrap();
        for states in &m.states {
            for rho in states.values() {
                let d = crate::qstate::trace_distance(rho, &DensityMatrix::maximally_mixed(2)).unwrap();
                assert!(d < 1e-12);
            }
        }
    }
}
