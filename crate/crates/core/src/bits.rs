//! Binary strings: the elements of `I = {0,1}^*`, and the coin tapes that
//! drive randomized runs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A finite binary string with explicit length.
///
/// Position 0 is the leftmost bit. Bits are packed LSB-first into 64-bit
/// words; bits past `len` are always zero so derived equality and hashing
/// are bit-for-bit.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self { words: vec![0; words_for(len)], len }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = Self::zeros(len);
        for i in 0..len {
            s.set(i, true);
        }
        s
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut s = Self::zeros(0);
        for b in bits {
            s.push(b);
        }
        s
    }

    /// The `len`-bit big-endian rendering of `value` (leftmost bit is the
    /// most significant). Lexicographic order on a sphere matches numeric
    /// order of `value`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        Self::from_u128(value as u128, len)
    }

    pub fn from_u128(value: u128, len: usize) -> Self {
        let mut s = Self::zeros(len);
        for i in 0..len {
            let shift = len - 1 - i;
            if shift < 128 && (value >> shift) & 1 == 1 {
                s.set(i, true);
            }
        }
        s
    }

    /// Big-endian value, if the string fits in 64 bits.
    pub fn to_u64(&self) -> Option<u64> {
        if self.len > 64 {
            return None;
        }
        Some(self.iter().fold(0u64, |acc, b| (acc << 1) | b as u64))
    }

    pub fn to_u128(&self) -> Option<u128> {
        if self.len > 128 {
            return None;
        }
        Some(self.iter().fold(0u128, |acc, b| (acc << 1) | b as u128))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, bit);
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = bool> + ExactSizeIterator + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Bits `[start, end)` as a new string.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.len, "slice {start}..{end} out of range for length {}", self.len);
        Self::from_bits((start..end).map(|i| self.get(i)))
    }

    pub fn concat(&self, other: &BitString) -> Self {
        let mut out = self.clone();
        for b in other.iter() {
            out.push(b);
        }
        out
    }

    /// Bitwise complement over the full length.
    pub fn complement(&self) -> Self {
        Self::from_bits(self.iter().map(|b| !b))
    }

    /// True if the first `k` bits are all zero (vacuously true for `k = 0`).
    pub fn prefix_is_zero(&self, k: usize) -> bool {
        (0..k.min(self.len)).all(|i| !self.get(i))
    }

    pub fn contains_pattern(&self, pattern: &BitString) -> bool {
        if pattern.len > self.len {
            return false;
        }
        (0..=self.len - pattern.len).any(|s| (0..pattern.len).all(|j| self.get(s + j) == pattern.get(j)))
    }

    /// A stable 64-bit digest of (length, bits), used as a stream key.
    pub fn fingerprint(&self) -> u64 {
        let mut h = crate::seed::mix64(self.len as u64 ^ 0x9e37_79b9_7f4a_7c15);
        for w in &self.words {
            h = crate::seed::mix64(h ^ *w);
        }
        h
    }

    /// All strings of length `n` in lexicographic order.
    ///
    /// Only meaningful for `n < 64`; callers check enumeration caps first.
    pub fn sphere(n: usize) -> impl Iterator<Item = BitString> + Clone {
        assert!(n < 64, "cannot enumerate a sphere of radius {n}");
        (0..(1u64 << n)).map(move |i| BitString::from_u64(i, n))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{self}\")")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidArgument(format!("`{other}` is not a bit"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString::from_bits)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The randomness `σ` consumed by a single run: exactly `t(n)` bits.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoinTape(BitString);

impl CoinTape {
    pub fn new(bits: BitString) -> Self {
        Self(bits)
    }

    pub fn empty() -> Self {
        Self(BitString::zeros(0))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }

    /// Sub-tape `[start, start + len)`.
    pub fn segment(&self, start: usize, len: usize) -> CoinTape {
        CoinTape(self.0.slice(start, start + len))
    }
}

impl From<BitString> for CoinTape {
    fn from(b: BitString) -> Self {
        Self(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_display() {
        let s: BitString = "1011".parse().unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.to_u64(), Some(0b1011));
        assert_eq!(s.to_string(), "1011");
        assert!("10a1".parse::<BitString>().is_err());
        assert_eq!("".parse::<BitString>().unwrap(), BitString::zeros(0));
    }

    #[test]
    fn equality_respects_length() {
        assert_ne!(BitString::from_u64(0, 3), BitString::from_u64(0, 4));
        assert_eq!(BitString::from_u64(5, 3), "101".parse().unwrap());
    }

    #[test]
    fn sphere_is_lexicographic() {
        let all: Vec<String> = BitString::sphere(2).map(|s| s.to_string()).collect();
        assert_eq!(all, ["00", "01", "10", "11"]);
        assert_eq!(BitString::sphere(0).count(), 1);
    }

    #[test]
    fn pattern_and_prefix() {
        let s: BitString = "0110".parse().unwrap();
        assert!(s.contains_pattern(&"11".parse().unwrap()));
        assert!(!s.contains_pattern(&"00".parse().unwrap()));
        assert!(s.prefix_is_zero(1));
        assert!(!s.prefix_is_zero(2));
        assert!(s.prefix_is_zero(0));
    }

    #[test]
    fn long_strings_cross_word_boundaries() {
        let mut s = BitString::zeros(130);
        s.set(0, true);
        s.set(64, true);
        s.set(129, true);
        assert_eq!(s.count_ones(), 3);
        assert_eq!(s.slice(63, 66).to_string(), "010");
        assert_eq!(s.complement().count_ones(), 127);
    }

    proptest! {
        #[test]
        fn u64_roundtrip(v in any::<u64>(), extra in 0usize..8) {
            let len = 64 - (v.leading_zeros() as usize).min(64) + extra;
            let len = len.min(64);
            let s = BitString::from_u64(v, len);
            prop_assert_eq!(s.len(), len);
            prop_assert_eq!(s.to_u64().unwrap(), if len == 64 { v } else { v & ((1u64 << len) - 1) });
            let back: BitString = s.to_string().parse().unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn concat_then_slice(a in proptest::collection::vec(any::<bool>(), 0..100),
                             b in proptest::collection::vec(any::<bool>(), 0..100)) {
            let x = BitString::from_bits(a.clone());
            let y = BitString::from_bits(b.clone());
            let z = x.concat(&y);
            prop_assert_eq!(z.len(), a.len() + b.len());
            prop_assert_eq!(z.slice(0, a.len()), x);
            prop_assert_eq!(z.slice(a.len(), z.len()), y);
        }
    }
}
