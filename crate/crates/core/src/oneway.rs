//! Toy stand-in for a classical unconditionally hiding commitment.
//!
//! Four seeded bijections `f_xz` on n-bit strings, indexed by the pair of
//! classical bits `(x, z)`. To commit to `(x, z)` the sender picks a uniform
//! `w` and publishes `y = f_xz(w)`; because every `f_xz` is a bijection, `y`
//! is uniform whatever `(x, z)` is.
//!
//! Inverting a table is trivial inside the simulator, so computational
//! hardness is modelled as a policy: [`InversionAudit`] refuses and records
//! every inversion attempted while it is locked. Protocol sessions keep it
//! locked until the open phase.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::SimRng;

pub const MAX_WIDTH: usize = 12;
pub const FAMILY_SCHEMA: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OneWayError {
    #[error("bit width {0} outside 1..={MAX_WIDTH}")]
    WidthOutOfRange(usize),
    #[error("expected a {expected}-bit string, got {got} bits")]
    WidthMismatch { expected: usize, got: usize },
    #[error("inversion of f_{x}{z} refused: the one-way assumption still holds in this phase", x = *.x as u8, z = *.z as u8)]
    InversionLocked { x: bool, z: bool },
    #[error("unsupported family schema version {0}")]
    Schema(u32),
}

/// Four bijections on `{0,1}^n` with their inverses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationFamily {
    n: usize,
    seed: u64,
    tables: [Vec<u32>; 4],
    inverses: [Vec<u32>; 4],
}

/// Serialized form: tables are regenerated from `(n, seed)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub schema: u32,
    pub n: usize,
    pub seed: u64,
}

fn slot(x: bool, z: bool) -> usize {
    ((x as usize) << 1) | z as usize
}

impl PermutationFamily {
    /// Fisher–Yates shuffles of the identity, drawn in the order
    /// `f00, f01, f10, f11` from one ChaCha stream seeded with `seed`.
    pub fn generate(n: usize, seed: u64) -> Result<Self, OneWayError> {
        if !(1..=MAX_WIDTH).contains(&n) {
            return Err(OneWayError::WidthOutOfRange(n));
        }
        let mut rng = SimRng::seed_from_u64(seed);
        let size = 1u32 << n;
        let tables: [Vec<u32>; 4] = std::array::from_fn(|_| {
            let mut t: Vec<u32> = (0..size).collect();
            t.shuffle(&mut rng);
            t
        });
        let inverses = std::array::from_fn(|k| {
            let mut inv = vec![0u32; size as usize];
            for (w, &y) in tables[k].iter().enumerate() {
                inv[y as usize] = w as u32;
            }
            inv
        });
        Ok(Self { n, seed, tables, inverses })
    }

    pub fn from_spec(spec: &FamilySpec) -> Result<Self, OneWayError> {
        if spec.schema != FAMILY_SCHEMA {
            return Err(OneWayError::Schema(spec.schema));
        }
        Self::generate(spec.n, spec.seed)
    }

    pub fn spec(&self) -> FamilySpec {
        FamilySpec { schema: FAMILY_SCHEMA, n: self.n, seed: self.seed }
    }

    pub fn width(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Forward table of `f_xz` (entry `w` is `f_xz(w)`).
    pub fn table(&self, x: bool, z: bool) -> &[u32] {
        &self.tables[slot(x, z)]
    }

    fn check_width(&self, s: &BitString) -> Result<(), OneWayError> {
        if s.width() != self.n {
            return Err(OneWayError::WidthMismatch { expected: self.n, got: s.width() });
        }
        Ok(())
    }

    /// `y = f_xz(w)`.
    pub fn eval(&self, x: bool, z: bool, w: &BitString) -> Result<BitString, OneWayError> {
        self.check_width(w)?;
        let y = self.tables[slot(x, z)][w.value() as usize];
        Ok(BitString::new(y as u64, self.n).expect("table output fits width"))
    }

    /// Unique `w` with `f_xz(w) = y`, bypassing any audit. Only simulator
    /// internals and tests should call this; protocol code goes through
    /// [`invert_audited`](Self::invert_audited).
    pub fn invert(&self, x: bool, z: bool, y: &BitString) -> Result<BitString, OneWayError> {
        self.check_width(y)?;
        let w = self.inverses[slot(x, z)][y.value() as usize];
        Ok(BitString::new(w as u64, self.n).expect("table output fits width"))
    }

    /// Inversion gated by `audit`: refused (and recorded) while locked.
    pub fn invert_audited(&self, audit: &mut InversionAudit, x: bool, z: bool, y: &BitString) -> Result<BitString, OneWayError> {
        self.check_width(y)?;
        if !audit.attempt() {
            return Err(OneWayError::InversionLocked { x, z });
        }
        self.invert(x, z, y)
    }
}

/// Records inversion attempts and refuses them until [`unlock`](Self::unlock).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InversionAudit {
    unlocked: bool,
    refused_calls: usize,
    permitted_calls: usize,
}

impl InversionAudit {
    pub fn locked() -> Self {
        Self::default()
    }

    pub fn unlock(&mut self) {
        self.unlocked = true;
    }

    pub fn is_unlocked(&self) -> bool {
        self.unlocked
    }

    /// Inversions attempted before unlocking.
    pub fn refused_calls(&self) -> usize {
        self.refused_calls
    }

    pub fn permitted_calls(&self) -> usize {
        self.permitted_calls
    }

    fn attempt(&mut self) -> bool {
        if self.unlocked {
            self.permitted_calls += 1;
        } else {
            self.refused_calls += 1;
        }
        self.unlocked
    }
}

/// The public evidence `y` of a classical commitment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalCommitment {
    pub y: BitString,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all(n: usize) -> impl Iterator<Item = BitString> {
        (0..1u64 << n).map(move |v| BitString::new(v, n).unwrap())
    }

    const PAIRS: [(bool, bool); 4] = [(false, false), (false, true), (true, false), (true, true)];

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(PermutationFamily::generate(4, 9).unwrap(), PermutationFamily::generate(4, 9).unwrap());
    }

    #[test]
    fn tables_are_bijections() {
        let fam = PermutationFamily::generate(3, 17).unwrap();
        for (x, z) in PAIRS {
            let mut t = fam.table(x, z).to_vec();
            t.sort_unstable();
            assert_eq!(t, (0..8).collect::<Vec<u32>>());
        }
    }

    #[test]
    fn different_seeds_differ() {
        let differing = (0..100u64)
            .filter(|&s| PermutationFamily::generate(3, 2 * s).unwrap() != PermutationFamily::generate(3, 2 * s + 1).unwrap())
            .count();
        // Two independent draws of four permutations of 8 elements coincide
        // with probability (1/8!)^4; any collision here would be a bug.
        assert_eq!(differing, 100);
    }

    #[test]
    fn width_range_enforced() {
        assert_eq!(PermutationFamily::generate(0, 1), Err(OneWayError::WidthOutOfRange(0)));
        assert_eq!(PermutationFamily::generate(13, 1), Err(OneWayError::WidthOutOfRange(13)));
        assert!(PermutationFamily::generate(12, 1).is_ok());
    }

    #[test]
    fn eval_invert_roundtrip() {
        let fam = PermutationFamily::generate(3, 5).unwrap();
        for (x, z) in PAIRS {
            let mut seen = std::collections::HashSet::new();
            for w in all(3) {
                let y = fam.eval(x, z, &w).unwrap();
                assert!(seen.insert(y), "f_xz not injective");
                assert_eq!(fam.invert(x, z, &y).unwrap(), w);
            }
            for y in all(3) {
                assert_eq!(fam.eval(x, z, &fam.invert(x, z, &y).unwrap()).unwrap(), y);
            }
        }
    }

    #[test]
    fn every_y_has_a_preimage_under_every_pair() {
        // Hiding: y alone is consistent with each of the four (x, z).
        let fam = PermutationFamily::generate(4, 11).unwrap();
        for y in all(4) {
            for (x, z) in PAIRS {
                let w = fam.invert(x, z, &y).unwrap();
                assert_eq!(fam.eval(x, z, &w).unwrap(), y);
            }
        }
    }

    #[test]
    fn cross_pair_collisions_always_exist() {
        for n in 1..=4 {
            let fam = PermutationFamily::generate(n, 100 + n as u64).unwrap();
            for y in all(n) {
                let preimages: Vec<_> = PAIRS.iter().map(|&(x, z)| ((x, z), fam.invert(x, z, &y).unwrap())).collect();
                assert_eq!(preimages.len(), 4);
                // exactly one w per pair
                for &((x, z), w) in &preimages {
                    let count = all(n).filter(|v| fam.eval(x, z, v).unwrap() == y).count();
                    assert_eq!(count, 1);
                    assert_eq!(fam.eval(x, z, &w).unwrap(), y);
                }
            }
        }
    }

    #[test]
    fn width_mismatch_errors() {
        let fam = PermutationFamily::generate(3, 5).unwrap();
        let w = BitString::new(1, 2).unwrap();
        assert!(matches!(fam.eval(false, false, &w), Err(OneWayError::WidthMismatch { .. })));
        assert!(matches!(fam.invert(false, false, &w), Err(OneWayError::WidthMismatch { .. })));
    }

    #[test]
    fn audit_refuses_until_unlocked() {
        let fam = PermutationFamily::generate(3, 5).unwrap();
        let y = BitString::new(3, 3).unwrap();
        let mut audit = InversionAudit::locked();
        assert!(matches!(fam.invert_audited(&mut audit, true, false, &y), Err(OneWayError::InversionLocked { .. })));
        assert_eq!(audit.refused_calls(), 1);
        audit.unlock();
        assert_eq!(fam.invert_audited(&mut audit, true, false, &y).unwrap(), fam.invert(true, false, &y).unwrap());
        assert_eq!(audit.permitted_calls(), 1);
        assert_eq!(audit.refused_calls(), 1);
    }

    #[test]
    fn spec_roundtrip() {
        let fam = PermutationFamily::generate(5, 77).unwrap();
        let json = serde_json::to_string(&fam.spec()).unwrap();
        assert_eq!(json, r#"{"schema":1,"n":5,"seed":77}"#);
        let back: FamilySpec = serde_json::from_str(&json).unwrap();
        assert_eq!(PermutationFamily::from_spec(&back).unwrap(), fam);
        assert_eq!(
            PermutationFamily::from_spec(&FamilySpec { schema: 2, n: 5, seed: 77 }),
            Err(OneWayError::Schema(2))
        );
    }
}
