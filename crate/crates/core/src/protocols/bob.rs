use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ProtocolError, BOB_REGISTER};
use crate::qstate::{Basis, StateVector};
use crate::SimRng;

/// When Bob measures his photons.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BobMode {
    /// Keep every photon coherent until Alice names its basis.
    #[default]
    Deferred,
    /// Measure each photon on arrival in a random basis; later checks are
    /// conclusive only where that basis matches the one Alice names.
    Immediate,
}

/// Honest receiver.
#[derive(Debug, Clone)]
pub struct Bob {
    mode: BobMode,
    early: Vec<Option<(Basis, bool)>>,
}

impl Bob {
    pub fn new(mode: BobMode) -> Self {
        Self { mode, early: Vec::new() }
    }

    pub fn mode(&self) -> BobMode {
        self.mode
    }

    /// Takes delivery of photon `index`.
    pub fn receive(&mut self, index: usize, state: &mut StateVector, rng: &mut SimRng) -> Result<(), ProtocolError> {
        if self.early.len() <= index {
            self.early.resize(index + 1, None);
        }
        if self.mode == BobMode::Immediate {
            let basis = Basis::from_bit(rng.random());
            let m = state.measure(&[BOB_REGISTER], &[basis], rng)?;
            *state = m.post_state;
            self.early[index] = Some((basis, m.outcome.bit(0)));
        }
        Ok(())
    }

    /// Uniform `size`-subset of `0..total`, sorted.
    pub fn sample(&self, total: usize, size: usize, rng: &mut SimRng) -> Vec<usize> {
        let mut x = index::sample(rng, total, size).into_vec();
        x.sort_unstable();
        x
    }

    /// Checks that photon `index` reads `expected` in `basis`. Returns the
    /// failure reason, if any.
    pub fn check_photon(
        &mut self,
        index: usize,
        state: &mut StateVector,
        basis: Basis,
        expected: bool,
        rng: &mut SimRng,
    ) -> Result<Option<String>, ProtocolError> {
        let observed = match self.mode {
            BobMode::Deferred => {
                let m = state.measure(&[BOB_REGISTER], &[basis], rng)?;
                *state = m.post_state;
                m.outcome.bit(0)
            }
            BobMode::Immediate => match self.early.get(index).copied().flatten() {
                Some((b, o)) if b == basis => o,
                Some(_) => return Ok(None),
                None => return Err(ProtocolError::Strategy(format!("photon {index} was never delivered"))),
            },
        };
        if observed == expected {
            Ok(None)
        } else {
            Ok(Some(format!("photon {index} measured {} in the {basis:?} basis, unveiled {}", observed as u8, expected as u8)))
        }
    }
}
