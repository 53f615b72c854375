use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::bits::MAX_WIDTH as MAX_BITSTRING;
use crate::protocols::{BobMode, KentParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolChoice {
    Kent,
    Bb84,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AliceChoice {
    Honest,
    Attack,
}

/// Which bit Alice opens.
///
/// With `coin_after_commit` the bit is a fair coin drawn from the trial's
/// generator once the commit phase is over: after the test phase for honest
/// Kent-style Alice (her bit only enters through the masks), after the mask
/// phase for the Kent attacker, and after the photons are sent for the EPR
/// attacker. Honest BB84 Alice has to know her bit when preparing photons,
/// so she draws it just before the commit phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpenBitPolicy {
    Fixed0,
    Fixed1,
    CoinAfterCommit,
}

impl OpenBitPolicy {
    pub fn fixed_bit(self) -> Option<bool> {
        match self {
            OpenBitPolicy::Fixed0 => Some(false),
            OpenBitPolicy::Fixed1 => Some(true),
            OpenBitPolicy::CoinAfterCommit => None,
        }
    }
}

/// Protocol variant used by the concealment probe.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVariant {
    #[default]
    Standard,
    /// Deliberately broken: Alice also announces `z_i` for every photon Bob
    /// keeps. Used as a sanity check that the probe detects leaks.
    LeakZ,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

/// Photon counts and commitment width of Kent-style trials; the per-trial
/// seed is supplied by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KentShape {
    pub total_photons: usize,
    pub retained_photons: usize,
    pub commitment_width: usize,
}

impl Default for KentShape {
    fn default() -> Self {
        Self { total_photons: 20, retained_photons: 10, commitment_width: 3 }
    }
}

impl KentShape {
    pub fn params(&self, seed: u64) -> Result<KentParams, crate::protocols::ProtocolError> {
        KentParams::new(self.total_photons, self.retained_photons, self.commitment_width, seed)
    }
}

pub const DEFAULT_BB84_PHOTONS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub format: ReportFormat,
}

/// A batch of seeded trials. Trial `i` runs with seed `base_seed + i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: ProtocolChoice,
    pub alice: AliceChoice,
    #[serde(default)]
    pub bob: BobMode,
    /// Kent-style sizes; defaults to `N_B = 20, N = 10, n = 3`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kent: Option<KentShape>,
    /// BB84 photon count; defaults to 10.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photons: Option<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub open_bit_policy: OpenBitPolicy,
    /// Honest Alice opens the complement of the bit she committed to.
    #[serde(default)]
    pub claim_complement: bool,
    #[serde(default)]
    pub probe_variant: ProbeVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

fn config_error(field: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config { field: field.to_string(), message: message.into() }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_error("<document>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_json(&text)
    }

    pub fn kent_shape(&self) -> KentShape {
        self.kent.unwrap_or_default()
    }

    pub fn photon_count(&self) -> usize {
        self.photons.unwrap_or(DEFAULT_BB84_PHOTONS)
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.base_seed + trial as u64
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(config_error("trials", "must be at least 1"));
        }
        if self.base_seed.checked_add(self.trials as u64).is_none() {
            return Err(config_error("base_seed", "base_seed + trials overflows a 64-bit seed"));
        }
        match self.protocol {
            ProtocolChoice::Kent => {
                if self.photons.is_some() {
                    return Err(config_error("photons", "only used by the bb84 protocol; set kent.total_photons instead"));
                }
                self.kent_shape().params(0).map_err(|e| config_error("kent", e.to_string()))?;
            }
            ProtocolChoice::Bb84 => {
                if self.kent.is_some() {
                    return Err(config_error("kent", "only used by the kent protocol"));
                }
                let n = self.photon_count();
                if !(1..=MAX_BITSTRING).contains(&n) {
                    return Err(config_error("photons", format!("must be in 1..={MAX_BITSTRING}")));
                }
            }
        }
        if self.claim_complement && self.alice == AliceChoice::Attack {
            return Err(config_error("claim_complement", "only applies to honest Alice"));
        }
        Ok(())
    }
}
