//! Finite binary strings and the digitwise xor action.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A finite word over `{0,1}`.
///
/// The empty word is a valid value: it is the root of the tree of strings
/// and the identity of the xor action.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn empty() -> Self {
        BitString { bits: Vec::new() }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Digit at position `k`. Panics if `k` is out of range.
    pub fn bit(&self, k: usize) -> bool {
        self.bits[k]
    }

    pub fn get(&self, k: usize) -> Option<bool> {
        self.bits.get(k).copied()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// The one-digit extension `self⌢i`.
    pub fn child(&self, i: bool) -> Self {
        let mut bits = self.bits.clone();
        bits.push(i);
        BitString { bits }
    }

    pub fn push(&mut self, i: bool) {
        self.bits.push(i);
    }

    /// Concatenation `self⌢other`.
    pub fn concat(&self, other: &BitString) -> Self {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        BitString { bits }
    }

    pub fn parent(&self) -> Option<Self> {
        if self.bits.is_empty() {
            None
        } else {
            Some(BitString {
                bits: self.bits[..self.bits.len() - 1].to_vec(),
            })
        }
    }

    /// The prefix of length `min(n, len)`.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.bits.len());
        BitString {
            bits: self.bits[..n].to_vec(),
        }
    }

    /// `self ⊆ other` in the prefix order on strings.
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        self.bits.len() <= other.bits.len() && other.bits[..self.bits.len()] == self.bits[..]
    }

    /// `self ⊂ other`: proper prefix.
    pub fn is_proper_prefix_of(&self, other: &BitString) -> bool {
        self.bits.len() < other.bits.len() && self.is_prefix_of(other)
    }

    /// Comparable in the prefix order.
    pub fn comparable(&self, other: &BitString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    pub fn incomparable(&self, other: &BitString) -> bool {
        !self.comparable(other)
    }

    /// All strings of length exactly `n`, in lexicographic order.
    pub fn all_of_length(n: usize) -> Vec<BitString> {
        let mut out = Vec::with_capacity(1 << n);
        let mut cur = vec![false; n];
        loop {
            out.push(BitString { bits: cur.clone() });
            // increment as a binary counter, most significant digit first
            let mut k = n;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if !cur[k] {
                    cur[k] = true;
                    for b in cur.iter_mut().skip(k + 1) {
                        *b = false;
                    }
                    break;
                }
            }
        }
    }

    /// All strings of length at most `n`, shortest first, lexicographic inside
    /// a length class.
    pub fn all_up_to(n: usize) -> Vec<BitString> {
        let mut out = Vec::new();
        for k in 0..=n {
            out.extend(Self::all_of_length(k));
        }
        out
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StringParseError {
    #[error("invalid digit {found:?} in binary string")]
    InvalidDigit { found: char },
}

impl FromStr for BitString {
    type Err = StringParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => return Err(StringParseError::InvalidDigit { found: other }),
            }
        }
        Ok(BitString { bits })
    }
}

/// The xor action of `s` on a string `t`: digits below `min(|s|,|t|)` flip by
/// `s`, digits above copy `t`. The result always has the length of `t`.
pub fn xor_strings(s: &BitString, t: &BitString) -> BitString {
    let bits = t
        .bits
        .iter()
        .enumerate()
        .map(|(k, &b)| match s.get(k) {
            Some(sb) => b ^ sb,
            None => b,
        })
        .collect();
    BitString { bits }
}

/// Digitwise xor padded to the longer length; composing two actions equals
/// acting once by `xor_pad` of the two strings.
pub fn xor_pad(s: &BitString, u: &BitString) -> BitString {
    let n = s.len().max(u.len());
    let bits = (0..n)
        .map(|k| s.get(k).unwrap_or(false) ^ u.get(k).unwrap_or(false))
        .collect();
    BitString { bits }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn xor_basic() {
        assert_eq!(xor_strings(&bs("11"), &bs("10")), bs("01"));
        assert_eq!(xor_strings(&BitString::empty(), &bs("0110")), bs("0110"));
        assert_eq!(xor_strings(&bs("10"), &bs("1011")), bs("0011"));
    }

    #[test]
    fn xor_preserves_length() {
        for s in BitString::all_up_to(4) {
            for t in BitString::all_up_to(4) {
                assert_eq!(xor_strings(&s, &t).len(), t.len());
            }
        }
    }

    #[test]
    fn xor_involution() {
        for s in BitString::all_up_to(3) {
            for t in BitString::all_up_to(4) {
                assert_eq!(xor_strings(&s, &xor_strings(&s, &t)), t);
            }
        }
    }

    #[test]
    fn enumeration_sizes() {
        assert_eq!(BitString::all_of_length(0).len(), 1);
        assert_eq!(BitString::all_of_length(3).len(), 8);
        assert_eq!(BitString::all_up_to(3).len(), 15);
    }

    #[test]
    fn prefix_order() {
        assert!(bs("01").is_prefix_of(&bs("011")));
        assert!(!bs("01").is_prefix_of(&bs("001")));
        assert!(BitString::empty().is_prefix_of(&bs("1")));
        assert!(bs("10").incomparable(&bs("0")));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("01*".parse::<BitString>().is_err());
        assert_eq!("".parse::<BitString>().unwrap(), BitString::empty());
    }
}
