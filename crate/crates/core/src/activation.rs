//! Activation vectors: the subset of channels served by one round.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported channel count for bitmask-backed subsets.
pub const MAX_CHANNELS: usize = 64;

/// A nonzero binary vector over `len` channels.
///
/// The textual form is a bitstring whose i-th character (from the left) is
/// channel i, so `"10"` activates channel 0 of a two-channel network.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActivationVector {
    bits: u64,
    len: u8,
}

impl ActivationVector {
    pub fn new(bits: u64, len: usize) -> Result<Self> {
        if len == 0 || len > MAX_CHANNELS {
            return Err(Error::DimensionMismatch { expected: MAX_CHANNELS, got: len });
        }
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        if bits & !mask != 0 {
            return Err(Error::DimensionMismatch { expected: len, got: 64 - bits.leading_zeros() as usize });
        }
        if bits == 0 {
            return Err(Error::EmptyActivation);
        }
        Ok(ActivationVector { bits, len: len as u8 })
    }

    pub fn from_channels(channels: &[usize], len: usize) -> Result<Self> {
        let mut bits = 0u64;
        for &c in channels {
            if c >= len {
                return Err(Error::DimensionMismatch { expected: len, got: c + 1 });
            }
            bits |= 1 << c;
        }
        Self::new(bits, len)
    }

    /// Every channel active.
    pub fn all(len: usize) -> Result<Self> {
        let bits = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        Self::new(bits, len)
    }

    /// The first `m` channels, i.e. the subset served by `RR(m)`.
    pub fn first(m: usize, len: usize) -> Result<Self> {
        if m > len {
            return Err(Error::DimensionMismatch { expected: len, got: m });
        }
        let bits = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
        Self::new(bits, len)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of active channels, `M(φ)`.
    pub fn count(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn is_active(&self, n: usize) -> bool {
        n < self.len() && self.bits & (1 << n) != 0
    }

    /// Active channel indices in increasing order.
    pub fn channels(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&n| self.is_active(n))
    }

    pub fn to_bitstring(&self) -> String {
        (0..self.len()).map(|n| if self.is_active(n) { '1' } else { '0' }).collect()
    }

    /// All `2^len - 1` nonzero vectors.
    pub fn enumerate(len: usize) -> impl Iterator<Item = ActivationVector> {
        assert!((1..64).contains(&len), "enumeration supports 1..=63 channels");
        (1u64..(1u64 << len)).map(move |bits| ActivationVector { bits, len: len as u8 })
    }

    /// Vectors with exactly `d` active channels.
    pub fn enumerate_with_count(len: usize, d: u32) -> impl Iterator<Item = ActivationVector> {
        Self::enumerate(len).filter(move |a| a.count() == d)
    }
}

impl fmt::Debug for ActivationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "φ({})", self.to_bitstring())
    }
}

impl fmt::Display for ActivationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

impl FromStr for ActivationVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s.len() > MAX_CHANNELS {
            return Err(Error::BadBitstring(s.to_string()));
        }
        let mut bits = 0u64;
        for (i, c) in s.chars().enumerate() {
            match c {
                '1' => bits |= 1 << i,
                '0' => {}
                _ => return Err(Error::BadBitstring(s.to_string())),
            }
        }
        ActivationVector::new(bits, s.len())
    }
}

impl Serialize for ActivationVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_bitstring())
    }
}

impl<'de> Deserialize<'de> for ActivationVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitstring_round_trip() {
        let a: ActivationVector = "1011".parse().unwrap();
        assert_eq!(a.count(), 3);
        assert_eq!(a.channels().collect::<Vec<_>>(), vec![0, 2, 3]);
        assert_eq!(a.to_bitstring(), "1011");
        assert!("0000".parse::<ActivationVector>().is_err());
        assert!("10x".parse::<ActivationVector>().is_err());
    }

    #[test]
    fn enumeration_sizes() {
        assert_eq!(ActivationVector::enumerate(4).count(), 15);
        assert_eq!(ActivationVector::enumerate_with_count(5, 2).count(), 10);
        assert_eq!(ActivationVector::first(2, 3).unwrap().to_bitstring(), "110");
    }

    #[test]
    fn rejects_out_of_range_bits() {
        assert!(ActivationVector::new(0b100, 2).is_err());
        assert!(ActivationVector::from_channels(&[3], 3).is_err());
    }
}
