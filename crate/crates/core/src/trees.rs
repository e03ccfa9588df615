//! Clopen Silver trees in pattern form, plus finite truncated windows.
//!
//! A pattern is a finite word over `{Fixed(0), Fixed(1), Free}` with an
//! implicit all-`Free` tail; it presents the tree of all strings that match
//! every fixed position. Every such tree is perfect, and its branching is
//! positionwise independent: a level is either forced to 0, forced to 1, or
//! fully branching, with cofinitely many branching levels. The class is
//! closed under restriction, the xor action, intersection and sibling
//! unions, which is exactly the algebra the fusion machinery needs.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::strings::BitString;

/// One position of a pattern.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Slot {
    Fixed(bool),
    Free,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("node {node:?} is not in the tree {pattern}")]
    NodeNotInTree { node: BitString, pattern: String },
    #[error("union of parts is not positionwise independent: {detail}")]
    NotPositionwiseIndependent { detail: String },
    #[error("invalid pattern character {found:?} (expected 0, 1 or *)")]
    InvalidPatternChar { found: char },
    #[error("empty pattern literal (the full tree is written \"*\")")]
    EmptyPatternLiteral,
}

/// A finitely presented Silver tree.
///
/// The stored word is canonical: it never ends in `Free`, so pattern equality
/// decides tree equality. The empty word denotes the full tree.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SilverPattern {
    slots: Vec<Slot>,
}

impl SilverPattern {
    /// Builds a pattern from raw slots, trimming trailing `Free` positions.
    pub fn new(mut slots: Vec<Slot>) -> Self {
        while slots.last() == Some(&Slot::Free) {
            slots.pop();
        }
        SilverPattern { slots }
    }

    /// The full tree of all strings.
    pub fn full() -> Self {
        SilverPattern { slots: Vec::new() }
    }

    /// The pattern that fixes the single position `k` to `digit` and is free
    /// everywhere else.
    pub fn fixing(k: usize, digit: bool) -> Self {
        let mut slots = vec![Slot::Free; k];
        slots.push(Slot::Fixed(digit));
        SilverPattern { slots }
    }

    pub fn is_full(&self) -> bool {
        self.slots.is_empty()
    }

    /// Canonical pattern length; all positions at or above it are free.
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Slot at position `k` (free beyond the stored word).
    pub fn slot(&self, k: usize) -> Slot {
        self.slots.get(k).copied().unwrap_or(Slot::Free)
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Positions below `bound` that are free.
    pub fn free_positions_below(&self, bound: usize) -> Vec<usize> {
        (0..bound).filter(|&k| self.slot(k) == Slot::Free).collect()
    }

    /// Tree membership: every fixed position below `|t|` must match.
    pub fn contains(&self, t: &BitString) -> bool {
        (0..t.len()).all(|k| match self.slot(k) {
            Slot::Fixed(d) => t.bit(k) == d,
            Slot::Free => true,
        })
    }

    /// The stem: the fixed digits before the first free position. Both
    /// one-digit extensions of the stem are nodes of the tree.
    pub fn stem(&self) -> BitString {
        let mut bits = Vec::new();
        for slot in &self.slots {
            match slot {
                Slot::Fixed(d) => bits.push(*d),
                Slot::Free => break,
            }
        }
        BitString::from_bits(bits)
    }

    /// Length of the stem, i.e. the first free position.
    pub fn first_free(&self) -> usize {
        self.stem().len()
    }

    /// The restriction to nodes comparable with `u`: positions below `|u|`
    /// become fixed to the digits of `u`, positions above copy this pattern.
    pub fn restrict(&self, u: &BitString) -> Result<SilverPattern, TreeError> {
        if !self.contains(u) {
            return Err(TreeError::NodeNotInTree {
                node: u.clone(),
                pattern: self.to_string(),
            });
        }
        let mut slots: Vec<Slot> = (0..u.len()).map(|k| Slot::Fixed(u.bit(k))).collect();
        for k in u.len()..self.slots.len() {
            slots.push(self.slots[k]);
        }
        Ok(SilverPattern::new(slots))
    }

    /// The xor action: fixed digits below `|s|` flip by `s`, free positions
    /// stay free. Acting twice by the same string is the identity.
    pub fn act(&self, s: &BitString) -> SilverPattern {
        let slots = self
            .slots
            .iter()
            .enumerate()
            .map(|(k, slot)| match (slot, s.get(k)) {
                (Slot::Fixed(d), Some(true)) => Slot::Fixed(!d),
                (other, _) => *other,
            })
            .collect();
        SilverPattern::new(slots)
    }

    /// Greatest lower bound: positionwise merge where fixed beats free and
    /// contradictory fixed digits make the pair incompatible (`None`).
    pub fn intersect(&self, other: &SilverPattern) -> Option<SilverPattern> {
        let n = self.len().max(other.len());
        let mut slots = Vec::with_capacity(n);
        for k in 0..n {
            let merged = match (self.slot(k), other.slot(k)) {
                (Slot::Free, s) | (s, Slot::Free) => s,
                (Slot::Fixed(a), Slot::Fixed(b)) if a == b => Slot::Fixed(a),
                _ => return None,
            };
            slots.push(merged);
        }
        Some(SilverPattern::new(slots))
    }

    /// Subtree order: `self ⊆ other` iff every fixed position of `other` is
    /// fixed to the same digit here.
    pub fn is_subset(&self, other: &SilverPattern) -> bool {
        (0..other.len()).all(|k| match other.slot(k) {
            Slot::Free => true,
            fixed => self.slot(k) == fixed,
        })
    }

    /// Decides whether this tree is covered by the union of `parts`.
    ///
    /// Checks the nodes at depth `L`, the maximum pattern length over the
    /// inputs; the all-free tails above `L` make that depth decisive, so the
    /// answer is exact, not approximate.
    pub fn subset_of_union(&self, parts: &[SilverPattern]) -> bool {
        let depth = parts
            .iter()
            .map(SilverPattern::len)
            .chain(std::iter::once(self.len()))
            .max()
            .unwrap_or(0);
        self.nodes_at(depth)
            .iter()
            .all(|t| parts.iter().any(|p| p.contains(t)))
    }

    /// Like [`subset_of_union`](Self::subset_of_union) but also returns, for
    /// a covered tree, the indices of the members actually used.
    pub fn cover_witness(&self, parts: &[SilverPattern]) -> Option<Vec<usize>> {
        let depth = parts
            .iter()
            .map(SilverPattern::len)
            .chain(std::iter::once(self.len()))
            .max()
            .unwrap_or(0);
        let mut used = BTreeSet::new();
        for t in self.nodes_at(depth) {
            let hit = parts.iter().position(|p| p.contains(&t))?;
            used.insert(hit);
        }
        Some(used.into_iter().collect())
    }

    /// The union of a family of sibling translates: the parts must share one
    /// shape and differ exactly by all digit combinations on a set of
    /// positions, which become free in the result.
    pub fn union_siblings(parts: &[SilverPattern]) -> Result<SilverPattern, TreeError> {
        let parts: Vec<&SilverPattern> = {
            let set: BTreeSet<&SilverPattern> = parts.iter().collect();
            set.into_iter().collect()
        };
        assert!(!parts.is_empty(), "union_siblings needs at least one part");
        if parts.len() == 1 {
            return Ok(parts[0].clone());
        }
        let len = parts[0].len();
        if parts.iter().any(|p| p.len() != len) {
            return Err(TreeError::NotPositionwiseIndependent {
                detail: "parts have different canonical lengths".into(),
            });
        }
        let mut merged = Vec::with_capacity(len);
        let mut varying = Vec::new();
        for k in 0..len {
            let mut digits = BTreeSet::new();
            let mut free = false;
            for p in &parts {
                match p.slot(k) {
                    Slot::Fixed(d) => {
                        digits.insert(d);
                    }
                    Slot::Free => free = true,
                }
            }
            let slot = match (free, digits.len()) {
                (true, 0) => Slot::Free,
                (false, 1) => Slot::Fixed(*digits.iter().next().unwrap()),
                (false, 2) => {
                    varying.push(k);
                    Slot::Free
                }
                _ => {
                    return Err(TreeError::NotPositionwiseIndependent {
                        detail: format!("position {k} mixes fixed and free slots"),
                    })
                }
            };
            merged.push(slot);
        }
        // the digit vectors on the varying positions must realize every combination
        let combos: BTreeSet<Vec<bool>> = parts
            .iter()
            .map(|p| {
                varying
                    .iter()
                    .map(|&k| match p.slot(k) {
                        Slot::Fixed(d) => d,
                        Slot::Free => unreachable!(),
                    })
                    .collect()
            })
            .collect();
        if combos.len() != parts.len() || parts.len() != (1usize << varying.len()) {
            return Err(TreeError::NotPositionwiseIndependent {
                detail: format!(
                    "{} parts realize {} of {} digit combinations on positions {:?}",
                    parts.len(),
                    combos.len(),
                    1usize << varying.len(),
                    varying
                ),
            });
        }
        Ok(SilverPattern::new(merged))
    }

    /// All nodes of exactly length `d`, in lexicographic order.
    pub fn nodes_at(&self, d: usize) -> Vec<BitString> {
        let mut level = vec![BitString::empty()];
        for k in 0..d {
            let mut next = Vec::with_capacity(level.len() * 2);
            for node in &level {
                match self.slot(k) {
                    Slot::Fixed(digit) => next.push(node.child(digit)),
                    Slot::Free => {
                        next.push(node.child(false));
                        next.push(node.child(true));
                    }
                }
            }
            level = next;
        }
        level
    }

    /// The finite window of all nodes of length at most `d`.
    pub fn truncate(&self, d: usize) -> TruncatedTree {
        let mut nodes = BTreeSet::new();
        let mut level = vec![BitString::empty()];
        nodes.insert(BitString::empty());
        for k in 0..d {
            let mut next = Vec::with_capacity(level.len() * 2);
            for node in &level {
                match self.slot(k) {
                    Slot::Fixed(digit) => next.push(node.child(digit)),
                    Slot::Free => {
                        next.push(node.child(false));
                        next.push(node.child(true));
                    }
                }
            }
            nodes.extend(next.iter().cloned());
            level = next;
        }
        TruncatedTree { depth: d, nodes }
    }
}

impl fmt::Display for SilverPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.slots.is_empty() {
            return write!(f, "*");
        }
        for slot in &self.slots {
            let c = match slot {
                Slot::Fixed(false) => '0',
                Slot::Fixed(true) => '1',
                Slot::Free => '*',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for SilverPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "~{self}")
    }
}

impl FromStr for SilverPattern {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(TreeError::EmptyPatternLiteral);
        }
        let mut slots = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => slots.push(Slot::Fixed(false)),
                '1' => slots.push(Slot::Fixed(true)),
                '*' => slots.push(Slot::Free),
                other => return Err(TreeError::InvalidPatternChar { found: other }),
            }
        }
        Ok(SilverPattern::new(slots))
    }
}

/// A finite window onto a tree: all nodes of length at most `depth`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TruncatedTree {
    depth: usize,
    nodes: BTreeSet<BitString>,
}

impl TruncatedTree {
    pub fn from_parts(depth: usize, nodes: BTreeSet<BitString>) -> Self {
        TruncatedTree { depth, nodes }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn nodes(&self) -> &BTreeSet<BitString> {
        &self.nodes
    }

    pub fn contains(&self, t: &BitString) -> bool {
        self.nodes.contains(t)
    }

    pub fn nodes_at(&self, d: usize) -> Vec<BitString> {
        self.nodes.iter().filter(|n| n.len() == d).cloned().collect()
    }

    /// The stem of the window: the unique branch below the first level that
    /// actually branches.
    pub fn stem(&self) -> BitString {
        let mut cur = BitString::empty();
        loop {
            let zero = self.nodes.contains(&cur.child(false));
            let one = self.nodes.contains(&cur.child(true));
            match (zero, one) {
                (true, false) => cur = cur.child(false),
                (false, true) => cur = cur.child(true),
                _ => return cur,
            }
        }
    }

    /// DOT rendering of the window; stem nodes are highlighted.
    pub fn to_dot(&self) -> String {
        let stem = self.stem();
        let mut out = String::from("digraph truncated_tree {\n  node [shape=circle];\n");
        for node in &self.nodes {
            let label = if node.is_empty() {
                "\u{39b}".to_string()
            } else {
                node.to_string()
            };
            let style = if node.is_prefix_of(&stem) {
                ", style=filled, fillcolor=lightgrey"
            } else {
                ""
            };
            out.push_str(&format!("  \"n_{node}\" [label=\"{label}\"{style}];\n"));
        }
        for node in &self.nodes {
            if let Some(parent) = node.parent() {
                out.push_str(&format!("  \"n_{parent}\" -> \"n_{node}\";\n"));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Checks that a window is a well-formed Silver-tree truncation: non-empty,
/// prefix-closed, no dead ends above the last level, and branching that is
/// uniform across each level (the positionwise-independence shape).
pub fn validate_silver_truncated(w: &TruncatedTree) -> bool {
    if !w.nodes.contains(&BitString::empty()) {
        return false;
    }
    for node in &w.nodes {
        if node.len() > w.depth {
            return false;
        }
        if let Some(parent) = node.parent() {
            if !w.nodes.contains(&parent) {
                return false;
            }
        }
    }
    for level in 0..w.depth {
        let mut level_children: Option<(bool, bool)> = None;
        for node in w.nodes.iter().filter(|n| n.len() == level) {
            let children = (
                w.nodes.contains(&node.child(false)),
                w.nodes.contains(&node.child(true)),
            );
            if children == (false, false) {
                return false; // dead end inside the window
            }
            match level_children {
                None => level_children = Some(children),
                Some(expected) if expected != children => return false,
                Some(_) => {}
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(s: &str) -> SilverPattern {
        s.parse().unwrap()
    }

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn canonical_trim() {
        assert_eq!(pat("0*"), pat("0"));
        assert_eq!(pat("*"), SilverPattern::full());
        assert_eq!(pat("**"), SilverPattern::full());
        assert_eq!(pat("01*0*").len(), 4);
        assert_eq!(pat("0").to_string(), "0");
        assert_eq!(SilverPattern::full().to_string(), "*");
    }

    #[test]
    fn membership() {
        assert!(pat("0*1").contains(&bs("011")));
        assert!(!pat("0*1").contains(&bs("010")));
        assert!(pat("0*1").contains(&bs("01")));
        assert!(pat("0*1").contains(&BitString::empty()));
    }

    #[test]
    fn stems() {
        assert_eq!(pat("01*0*").stem(), bs("01"));
        assert_eq!(SilverPattern::full().stem(), BitString::empty());
        assert_eq!(pat("1").stem(), bs("1"));
        // both stem children are nodes
        for p in ["01*0", "1", "*", "0*1"] {
            let p = pat(p);
            let s = p.stem();
            assert!(p.contains(&s.child(false)) && p.contains(&s.child(true)));
        }
    }

    #[test]
    fn restriction() {
        assert_eq!(pat("**").restrict(&bs("01")).unwrap(), pat("01"));
        assert_eq!(pat("01*").restrict(&bs("0")).unwrap(), pat("01"));
        assert!(matches!(
            pat("0*").restrict(&bs("10")),
            Err(TreeError::NodeNotInTree { .. })
        ));
    }

    #[test]
    fn action() {
        assert_eq!(pat("0*1").act(&bs("100")), pat("1*1"));
        assert_eq!(pat("0*1").act(&bs("00")), pat("0*1"));
        assert_eq!(SilverPattern::full().act(&bs("01")), SilverPattern::full());
        // involution
        for p in ["0*1", "01", "*", "1*0*1"] {
            let p = pat(p);
            for s in BitString::all_up_to(4) {
                assert_eq!(p.act(&s).act(&s), p);
            }
        }
    }

    #[test]
    fn intersection() {
        assert_eq!(pat("0**").intersect(&pat("*1*")), Some(pat("01")));
        assert_eq!(pat("0").intersect(&pat("1")), None);
        assert_eq!(pat("0*1").intersect(&SilverPattern::full()), Some(pat("0*1")));
    }

    #[test]
    fn subset_order() {
        assert!(pat("01").is_subset(&pat("0*")));
        assert!(!pat("0*").is_subset(&pat("01")));
        assert!(pat("0*1").is_subset(&pat("0*1")));
    }

    #[test]
    fn union_cover() {
        assert!(SilverPattern::full().subset_of_union(&[pat("0*"), pat("1*")]));
        assert!(!SilverPattern::full().subset_of_union(&[pat("0*"), pat("10")]));
        assert!(pat("00").subset_of_union(&[pat("0*")]));
        assert!(!pat("0").subset_of_union(&[]));
    }

    #[test]
    fn sibling_union() {
        assert_eq!(
            SilverPattern::union_siblings(&[pat("00"), pat("10")]).unwrap(),
            pat("*0")
        );
        assert_eq!(
            SilverPattern::union_siblings(&[pat("0*"), pat("1*")]).unwrap(),
            SilverPattern::full()
        );
        assert!(matches!(
            SilverPattern::union_siblings(&[pat("00"), pat("11")]),
            Err(TreeError::NotPositionwiseIndependent { .. })
        ));
    }

    #[test]
    fn truncation_window() {
        let w = pat("0*").truncate(2);
        let expect: BTreeSet<BitString> = ["", "0", "00", "01"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(w.nodes(), &expect);
        assert!(validate_silver_truncated(&w));
    }

    #[test]
    fn window_validation_rejects_correlated_branching() {
        let nodes: BTreeSet<BitString> = ["", "0", "1", "00", "11"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let w = TruncatedTree::from_parts(2, nodes);
        assert!(!validate_silver_truncated(&w));
    }

    #[test]
    fn truncations_always_validate() {
        for p in ["*", "0", "0*1", "1*0*1", "01"] {
            for d in 0..5 {
                assert!(validate_silver_truncated(&pat(p).truncate(d)));
            }
        }
    }

    #[test]
    fn dot_export_mentions_stem() {
        let dot = pat("0*").truncate(2).to_dot();
        assert!(dot.contains("fillcolor=lightgrey"));
        assert!(dot.starts_with("digraph"));
    }
}
