//! Fixed-width classical bit strings.
//!
//! A [`BitString`] is rendered most-significant bit first, so `"011"` has
//! value 3 and width 3. The same ordering is used when a measurement
//! outcome is read off a list of qubits: the first listed qubit is the
//! leftmost character.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest width supported by the `u64` backing store.
pub const MAX_WIDTH: usize = 63;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BitStringError {
    #[error("value {value} does not fit in {width} bits")]
    Overflow { value: u64, width: usize },
    #[error("width {0} exceeds the supported maximum")]
    TooWide(usize),
    #[error("invalid character {0:?} in bit string")]
    BadChar(char),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    value: u64,
    width: usize,
}

impl BitString {
    pub fn new(value: u64, width: usize) -> Result<Self, BitStringError> {
        if width > MAX_WIDTH {
            return Err(BitStringError::TooWide(width));
        }
        if value >> width != 0 {
            return Err(BitStringError::Overflow { value, width });
        }
        Ok(Self { value, width })
    }

    pub fn zeros(width: usize) -> Self {
        Self { value: 0, width }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let value = bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
        Self { value, width: bits.len() }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Bit `i` counted from the left (the most significant position).
    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.width, "bit index {i} out of range for width {}", self.width);
        (self.value >> (self.width - 1 - i)) & 1 == 1
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.width).map(|i| self.bit(i)).collect()
    }

    /// Splits into a prefix of `left` bits and the remaining suffix.
    pub fn split(&self, left: usize) -> (BitString, BitString) {
        assert!(left <= self.width);
        let right = self.width - left;
        let hi = self.value >> right;
        let lo = self.value & ((1u64 << right) - 1);
        (
            BitString { value: hi, width: left },
            BitString { value: lo, width: right },
        )
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        BitString {
            value: (self.value << other.width) | other.value,
            width: self.width + other.width,
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.width {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = BitStringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => return Err(BitStringError::BadChar(other)),
            }
        }
        if bits.len() > MAX_WIDTH {
            return Err(BitStringError::TooWide(bits.len()));
        }
        Ok(BitString::from_bits(&bits))
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde helper rendering a `bool` as `0`/`1`.
pub mod bit01 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(*b as u8)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(serde::de::Error::custom(format!("expected bit 0 or 1, got {other}"))),
        }
    }
}

/// Like [`bit01`] for `Option<bool>`.
pub mod opt_bit01 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &Option<bool>, s: S) -> Result<S::Ok, S::Error> {
        match b {
            Some(b) => s.serialize_some(&(*b as u8)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<bool>, D::Error> {
        match Option::<u8>::deserialize(d)? {
            None => Ok(None),
            Some(0) => Ok(Some(false)),
            Some(1) => Ok(Some(true)),
            Some(other) => Err(serde::de::Error::custom(format!("expected bit 0 or 1, got {other}"))),
        }
    }
}
