//! Lazily presented points of Cantor space and the xor action on them.
//!
//! A point is never a raw infinite object: it carries a finite prefix and an
//! explicit tail rule, so digit queries stay total and the eventual-equality
//! predicate stays decidable. Tails that follow a finite tree window are the
//! one partial case; comparisons involving them fail loudly instead of
//! guessing.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::strings::{xor_strings, BitString};
use crate::trees::{validate_silver_truncated, SilverPattern, Slot, TruncatedTree};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PointError {
    #[error("tail rules leave the cofinite comparison undecidable")]
    IncomparableTails,
    #[error("digit {position} is not decided by this point")]
    UndecidedDigit { position: usize },
    #[error("window is not a Silver-shaped truncation; cannot follow its levels")]
    InvalidWindow,
}

/// How a point continues beyond its stored prefix.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TailRule {
    AllZero,
    AllOne,
    /// Follow a total pattern: fixed positions give their digit, free
    /// positions resolve to 0 (a canonical branch choice).
    FollowStem(SilverPattern),
    /// Follow the levels of a finite Silver window; digits beyond the window
    /// depth are undecided.
    FollowWindow(TruncatedTree),
}

impl TailRule {
    fn digit(&self, k: usize) -> Option<bool> {
        match self {
            TailRule::AllZero => Some(false),
            TailRule::AllOne => Some(true),
            TailRule::FollowStem(p) => Some(match p.slot(k) {
                Slot::Fixed(d) => d,
                Slot::Free => false,
            }),
            TailRule::FollowWindow(w) => {
                if k >= w.depth() {
                    return None;
                }
                // level direction: uniform across the window by validation
                let node = w.nodes().iter().find(|n| n.len() == k)?;
                let zero = w.contains(&node.child(false));
                Some(!zero)
            }
        }
    }

    /// The digit the tail settles on cofinitely, when that is decided.
    fn eventual(&self) -> Option<bool> {
        match self {
            TailRule::AllZero => Some(false),
            TailRule::AllOne => Some(true),
            TailRule::FollowStem(_) => Some(false), // free tail resolves to 0
            TailRule::FollowWindow(_) => None,
        }
    }
}

/// A point of Cantor space: a finite prefix plus a tail rule.
///
/// Construction canonicalizes the prefix by dropping trailing digits that the
/// tail rule already produces, so structural equality is pointwise equality
/// for points sharing a tail rule.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LazyPoint {
    prefix: BitString,
    tail: TailRule,
}

impl LazyPoint {
    pub fn new(prefix: BitString, tail: TailRule) -> Self {
        let mut bits: Vec<bool> = prefix.bits().to_vec();
        while let Some(&last) = bits.last() {
            if tail.digit(bits.len() - 1) == Some(last) {
                bits.pop();
            } else {
                break;
            }
        }
        LazyPoint {
            prefix: BitString::from_bits(bits),
            tail,
        }
    }

    pub fn all_zero() -> Self {
        LazyPoint::new(BitString::empty(), TailRule::AllZero)
    }

    pub fn all_one() -> Self {
        LazyPoint::new(BitString::empty(), TailRule::AllOne)
    }

    pub fn follow_stem(prefix: BitString, pattern: SilverPattern) -> Self {
        LazyPoint::new(prefix, TailRule::FollowStem(pattern))
    }

    /// A point following a finite window; fails unless the window has the
    /// Silver truncation shape, since only then do its levels determine
    /// digits.
    pub fn follow_window(prefix: BitString, window: TruncatedTree) -> Result<Self, PointError> {
        if !validate_silver_truncated(&window) {
            return Err(PointError::InvalidWindow);
        }
        Ok(LazyPoint::new(prefix, TailRule::FollowWindow(window)))
    }

    pub fn prefix(&self) -> &BitString {
        &self.prefix
    }

    pub fn tail(&self) -> &TailRule {
        &self.tail
    }

    pub fn digit_at(&self, k: usize) -> Option<bool> {
        if k < self.prefix.len() {
            Some(self.prefix.bit(k))
        } else {
            self.tail.digit(k)
        }
    }

    pub fn is_decided_to(&self, n: usize) -> bool {
        (0..n).all(|k| self.digit_at(k).is_some())
    }

    /// The first `n` digits.
    pub fn prefix_to(&self, n: usize) -> Result<BitString, PointError> {
        let mut bits = Vec::with_capacity(n);
        for k in 0..n {
            bits.push(
                self.digit_at(k)
                    .ok_or(PointError::UndecidedDigit { position: k })?,
            );
        }
        Ok(BitString::from_bits(bits))
    }
}

impl fmt::Display for LazyPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tail = match &self.tail {
            TailRule::AllZero => "0\u{305}".to_string(),
            TailRule::AllOne => "1\u{305}".to_string(),
            TailRule::FollowStem(p) => format!("stem({p})"),
            TailRule::FollowWindow(w) => format!("window(depth {})", w.depth()),
        };
        write!(f, "{}|{}", self.prefix, tail)
    }
}

/// The xor action on points: digits below `|s|` flip by `s`, the tail rule is
/// unchanged. Requires the point to be decided below `|s|`.
pub fn xor_point(s: &BitString, x: &LazyPoint) -> LazyPoint {
    let n = s.len().max(x.prefix.len());
    let mut bits = Vec::with_capacity(n);
    for k in 0..n {
        let d = x
            .digit_at(k)
            .expect("xor_point needs the point decided below |s|");
        bits.push(d ^ s.get(k).unwrap_or(false));
    }
    LazyPoint::new(BitString::from_bits(bits), x.tail.clone())
}

/// The depth-`n` truncations of the orbit `{σ·x : |σ| ≤ n}`. For a total
/// point this is the whole level `2^n`. Requires `x` decided to depth `n`.
pub fn orbit_prefixes(x: &LazyPoint, n: usize) -> BTreeSet<BitString> {
    let base = x
        .prefix_to(n)
        .expect("orbit_prefixes needs the point decided to depth n");
    let mut out = BTreeSet::new();
    for sigma in BitString::all_up_to(n) {
        out.insert(xor_strings(&sigma, &base));
    }
    out
}

/// Eventual equality: true iff the two points differ at finitely many
/// positions. Decidable because admissible tails are eventually constant;
/// window tails are rejected.
pub fn e0_related(x: &LazyPoint, y: &LazyPoint) -> Result<bool, PointError> {
    let (ex, ey) = match (x.tail.eventual(), y.tail.eventual()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(PointError::IncomparableTails),
    };
    Ok(ex == ey)
}
