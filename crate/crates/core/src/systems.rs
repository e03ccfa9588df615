//! Splitting systems, their extend/reduce calculus, finite-support
//! multisystems, and fusion limits of chains.
//!
//! A splitting system of height `n` assigns a pattern tree to every binary
//! index of length below `n`, layer by layer, so that the layer-`k` stems all
//! have one length `h(k)`, child trees sit below the one-digit extensions of
//! their parent's stem, stems across a layer agree off the split positions,
//! and the layer trees are translates of each other above their stems. These
//! five clauses are what make the limit of an increasing chain a Silver tree
//! again, and each is checked by its own validator.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::strings::BitString;
use crate::trees::{SilverPattern, Slot, TruncatedTree};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SystemError {
    #[error("tree {tree} is not a subtree of {of} at index {index:?}")]
    NotASubtree {
        tree: String,
        of: String,
        index: BitString,
    },
    #[error("coordinate {0} is absent from every stage of the chain")]
    CoordinateAbsent(usize),
    #[error("chain is too short: needs stem depth {needed}, has {have}")]
    InsufficientStages { needed: usize, have: usize },
    #[error("malformed system table: {0}")]
    InvalidTable(String),
    #[error("stage does not extend or reduce its predecessor at coordinate {coord}: {detail}")]
    ChainOrder { coord: usize, detail: String },
    #[error("parse error: {0}")]
    Parse(String),
}

/// The ambient tree family for the membership clause of the validator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ambient {
    /// Every pattern tree is admitted.
    All,
    /// Only the listed trees are admitted.
    Explicit(BTreeSet<SilverPattern>),
}

impl Ambient {
    pub fn contains(&self, t: &SilverPattern) -> bool {
        match self {
            Ambient::All => true,
            Ambient::Explicit(set) => set.contains(t),
        }
    }
}

/// Per-clause validation outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseReport {
    pub name: &'static str,
    pub holds: bool,
    pub witness: Option<String>,
}

/// Validation report over the five system clauses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpeReport {
    pub clauses: Vec<ClauseReport>,
}

impl SpeReport {
    pub fn all_hold(&self) -> bool {
        self.clauses.iter().all(|c| c.holds)
    }

    pub fn first_violation(&self) -> Option<&ClauseReport> {
        self.clauses.iter().find(|c| !c.holds)
    }
}

impl fmt::Display for SpeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            match (&c.holds, &c.witness) {
                (true, _) => writeln!(f, "{}: ok", c.name)?,
                (false, Some(w)) => writeln!(f, "{}: violated ({w})", c.name)?,
                (false, None) => writeln!(f, "{}: violated", c.name)?,
            }
        }
        Ok(())
    }
}

/// A splitting system: trees indexed by all binary strings shorter than the
/// height.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SplitSystem {
    height: usize,
    trees: BTreeMap<BitString, SilverPattern>,
}

impl SplitSystem {
    /// The empty system, the unique one of height 0.
    pub fn empty() -> Self {
        SplitSystem {
            height: 0,
            trees: BTreeMap::new(),
        }
    }

    /// The height-1 system assigning `tree` to the empty index.
    pub fn seed(tree: SilverPattern) -> Self {
        let mut trees = BTreeMap::new();
        trees.insert(BitString::empty(), tree);
        SplitSystem { height: 1, trees }
    }

    /// Builds a system from an explicit table, checking domain completeness.
    pub fn from_table(
        height: usize,
        trees: BTreeMap<BitString, SilverPattern>,
    ) -> Result<Self, SystemError> {
        let expected: usize = (0..height).map(|k| 1usize << k).sum();
        if trees.len() != expected {
            return Err(SystemError::InvalidTable(format!(
                "height {height} needs {expected} entries, got {}",
                trees.len()
            )));
        }
        for s in trees.keys() {
            if s.len() >= height {
                return Err(SystemError::InvalidTable(format!(
                    "index {s:?} too long for height {height}"
                )));
            }
        }
        Ok(SplitSystem { height, trees })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_empty(&self) -> bool {
        self.height == 0
    }

    /// The tree at index `s`. Panics if `s` is outside the domain.
    pub fn tree(&self, s: &BitString) -> &SilverPattern {
        &self.trees[s]
    }

    pub fn get(&self, s: &BitString) -> Option<&SilverPattern> {
        self.trees.get(s)
    }

    pub fn table(&self) -> &BTreeMap<BitString, SilverPattern> {
        &self.trees
    }

    /// Stem of the tree at index `s`.
    pub fn stem_of(&self, s: &BitString) -> BitString {
        self.trees[s].stem()
    }

    /// The split-depth sequence, recomputed from stems: `h(k)` is the stem
    /// length of the first layer-`k` tree. Uniformity across a layer is the
    /// business of the validator, not of this accessor.
    pub fn split_depths(&self) -> Vec<usize> {
        (0..self.height)
            .map(|k| {
                let first = BitString::from_bits(vec![false; k]);
                self.trees[&first].stem().len()
            })
            .collect()
    }

    /// Stem length of the top layer. Panics on the empty system.
    pub fn top_stem_len(&self) -> usize {
        *self
            .split_depths()
            .last()
            .expect("top_stem_len needs height >= 1")
    }

    fn layer(&self, k: usize) -> Vec<BitString> {
        BitString::all_of_length(k)
    }

    /// Checks the five structural clauses against the ambient family.
    pub fn validate(&self, ambient: &Ambient) -> SpeReport {
        let mut clauses = Vec::with_capacity(5);

        // membership of every tree in the ambient family
        let mut bad = None;
        'outer1: for k in 0..self.height {
            for s in self.layer(k) {
                if !ambient.contains(&self.trees[&s]) {
                    bad = Some(format!("tree at {s:?} is outside the ambient family"));
                    break 'outer1;
                }
            }
        }
        clauses.push(ClauseReport {
            name: "membership",
            holds: bad.is_none(),
            witness: bad,
        });

        // children sit below the one-digit stem extensions of their parent
        let mut bad = None;
        'outer2: for k in 1..self.height {
            for s in self.layer(k) {
                let parent = s.parent().unwrap();
                let digit = s.bit(s.len() - 1);
                let r = self.stem_of(&parent);
                let target = match self.trees[&parent].restrict(&r.child(digit)) {
                    Ok(t) => t,
                    Err(_) => {
                        bad = Some(format!("stem child {digit} of {parent:?} not a node"));
                        break 'outer2;
                    }
                };
                if !self.trees[&s].is_subset(&target) {
                    bad = Some(format!(
                        "tree at {s:?} is not below its parent's stem extension"
                    ));
                    break 'outer2;
                }
            }
        }
        clauses.push(ClauseReport {
            name: "child-restriction",
            holds: bad.is_none(),
            witness: bad,
        });

        // stems of one layer share a length, and these lengths increase
        let mut bad = None;
        let mut depths = Vec::with_capacity(self.height);
        'outer3: for k in 0..self.height {
            let mut layer_len = None;
            for s in self.layer(k) {
                let len = self.stem_of(&s).len();
                match layer_len {
                    None => layer_len = Some(len),
                    Some(l) if l != len => {
                        bad = Some(format!("layer {k} mixes stem lengths {l} and {len}"));
                        break 'outer3;
                    }
                    Some(_) => {}
                }
            }
            let len = layer_len.unwrap();
            if let Some(&prev) = depths.last() {
                if len <= prev {
                    bad = Some(format!("split depths not increasing at layer {k}"));
                    break 'outer3;
                }
            }
            depths.push(len);
        }
        clauses.push(ClauseReport {
            name: "stem-lengths",
            holds: bad.is_none(),
            witness: bad,
        });

        // between consecutive split depths, stems of one layer agree
        let mut bad = None;
        'outer4: for m in 1..self.height {
            let layer = self.layer(m);
            let stems: Vec<BitString> = layer.iter().map(|s| self.stem_of(s)).collect();
            for k in 0..m {
                if depths.len() <= k + 1 {
                    break;
                }
                let (lo, hi) = (depths[k], depths[k + 1]);
                for j in lo + 1..hi {
                    let digits: BTreeSet<bool> = stems
                        .iter()
                        .filter_map(|r| r.get(j))
                        .collect();
                    if digits.len() > 1 {
                        bad = Some(format!("layer {m} stems disagree at position {j}"));
                        break 'outer4;
                    }
                }
            }
        }
        clauses.push(ClauseReport {
            name: "stem-agreement",
            holds: bad.is_none(),
            witness: bad,
        });

        // layer trees are translates above their stems
        let mut bad = None;
        'outer5: for m in 0..self.height {
            let layer = self.layer(m);
            let mut suffix: Option<Vec<Slot>> = None;
            for s in &layer {
                let tree = &self.trees[s];
                let stem_len = tree.stem().len();
                let upper: Vec<Slot> = (stem_len..tree.len().max(stem_len))
                    .map(|k| tree.slot(k))
                    .collect();
                match &suffix {
                    None => suffix = Some(upper),
                    Some(expected) if *expected != upper => {
                        bad = Some(format!("layer {m} trees differ above their stems"));
                        break 'outer5;
                    }
                    Some(_) => {}
                }
            }
        }
        clauses.push(ClauseReport {
            name: "layer-translates",
            holds: bad.is_none(),
            witness: bad,
        });

        SpeReport { clauses }
    }

    /// `self` extends `other`: at least as tall, identical below the smaller
    /// height.
    pub fn extends(&self, other: &SplitSystem) -> bool {
        self.height >= other.height
            && other.trees.iter().all(|(s, t)| self.get(s) == Some(t))
    }

    /// `self` properly extends `other`: extends with a strict height jump.
    pub fn properly_extends(&self, other: &SplitSystem) -> bool {
        self.height > other.height && self.extends(other)
    }

    /// `self` reduces `other`: same height, top-layer trees shrink, lower
    /// layers untouched.
    pub fn reduces(&self, other: &SplitSystem) -> bool {
        if self.height != other.height {
            return false;
        }
        if self.height == 0 {
            return true;
        }
        let top = self.height - 1;
        for k in 0..self.height {
            for s in self.layer(k) {
                let (mine, theirs) = (&self.trees[&s], &other.trees[&s]);
                let ok = if k == top {
                    mine.is_subset(theirs)
                } else {
                    mine == theirs
                };
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    /// Grows the system by one layer: each new tree is the parent restricted
    /// at a one-digit stem extension. Panics on the empty system; see
    /// [`SplitSystem::seed`] for height 0.
    pub fn extend(&self) -> SplitSystem {
        assert!(self.height >= 1, "extend needs height >= 1; seed first");
        let mut trees = self.trees.clone();
        for s in self.layer(self.height - 1) {
            let r = self.stem_of(&s);
            for digit in [false, true] {
                let child_tree = self.trees[&s]
                    .restrict(&r.child(digit))
                    .expect("stem children are nodes");
                trees.insert(s.child(digit), child_tree);
            }
        }
        SplitSystem {
            height: self.height + 1,
            trees,
        }
    }

    /// Shrinks the top layer around one designated index: the new tree at
    /// `s0` is `tree`, and every other top index receives the transplant of
    /// `tree` onto its own stem, so the layer stays a family of translates.
    pub fn reduce_at(
        &self,
        s0: &BitString,
        tree: &SilverPattern,
    ) -> Result<SplitSystem, SystemError> {
        assert!(self.height >= 1, "reduce_at needs height >= 1");
        let current = self.trees.get(s0).ok_or_else(|| {
            SystemError::InvalidTable(format!("index {s0:?} outside the top layer"))
        })?;
        if s0.len() != self.height - 1 {
            return Err(SystemError::InvalidTable(format!(
                "index {s0:?} is not in the top layer"
            )));
        }
        if !tree.is_subset(current) {
            return Err(SystemError::NotASubtree {
                tree: tree.to_string(),
                of: current.to_string(),
                index: s0.clone(),
            });
        }
        let h = self.top_stem_len();
        let mut trees = self.trees.clone();
        for s in self.layer(self.height - 1) {
            let r = self.stem_of(&s);
            let mut slots: Vec<Slot> = (0..h).map(|k| Slot::Fixed(r.bit(k))).collect();
            for k in h..tree.len().max(h) {
                slots.push(tree.slot(k));
            }
            trees.insert(s, SilverPattern::new(slots));
        }
        Ok(SplitSystem {
            height: self.height,
            trees,
        })
    }

    /// The union of the top layer as a single pattern tree: free exactly at
    /// the split positions below the top stem depth.
    pub fn union_top(&self) -> SilverPattern {
        assert!(self.height >= 1, "union_top needs height >= 1");
        let parts: Vec<SilverPattern> = self
            .layer(self.height - 1)
            .iter()
            .map(|s| self.trees[s].clone())
            .collect();
        SilverPattern::union_siblings(&parts)
            .expect("top layers of valid systems are sibling translates")
    }

    /// Acts on every tree of the system. Indices are relabeled at the split
    /// positions the action flips, so the child-restriction clause keeps
    /// holding: the acted tree formerly at `s⌢i` now sits below the flipped
    /// stem child.
    pub fn act(&self, sigma: &BitString) -> SplitSystem {
        let depths = self.split_depths();
        let flip: Vec<bool> = depths
            .iter()
            .map(|&h| sigma.get(h).unwrap_or(false))
            .collect();
        let trees = self
            .trees
            .iter()
            .map(|(s, t)| {
                let bits = (0..s.len()).map(|l| s.bit(l) ^ flip[l]).collect();
                (BitString::from_bits(bits), t.act(sigma))
            })
            .collect();
        SplitSystem {
            height: self.height,
            trees,
        }
    }

    /// DOT rendering of the index tree, each node labeled with its pattern
    /// and stem.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph split_system {\n  node [shape=box];\n");
        for (s, t) in &self.trees {
            let idx = if s.is_empty() {
                "\u{39b}".to_string()
            } else {
                s.to_string()
            };
            out.push_str(&format!(
                "  \"i_{s}\" [label=\"{idx}: {t} (stem {})\"];\n",
                t.stem()
            ));
        }
        for s in self.trees.keys() {
            if let Some(parent) = s.parent() {
                out.push_str(&format!("  \"i_{parent}\" -> \"i_{s}\";\n"));
            }
        }
        out.push_str("}\n");
        out
    }
}

impl fmt::Display for SplitSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "splitsystem")?;
        writeln!(f, "height {}", self.height)?;
        let depths: Vec<String> = self.split_depths().iter().map(usize::to_string).collect();
        writeln!(f, "h {}", depths.join(" "))?;
        for (s, t) in &self.trees {
            writeln!(f, "node \"{s}\" \"{t}\"")?;
        }
        write!(f, "end")
    }
}

impl FromStr for SplitSystem {
    type Err = SystemError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut height = None;
        let mut trees = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line == "splitsystem" || line == "end" || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("height ") {
                height = Some(
                    rest.trim()
                        .parse::<usize>()
                        .map_err(|e| SystemError::Parse(format!("height: {e}")))?,
                );
            } else if line.starts_with("h ") || line == "h" {
                continue; // split depths are derived, not authoritative
            } else if let Some(rest) = line.strip_prefix("node ") {
                let (index, pattern) = parse_two_quoted(rest)
                    .ok_or_else(|| SystemError::Parse(format!("bad node line: {line}")))?;
                let s: BitString = index
                    .parse()
                    .map_err(|e| SystemError::Parse(format!("index: {e}")))?;
                let p: SilverPattern = pattern
                    .parse()
                    .map_err(|e| SystemError::Parse(format!("pattern: {e}")))?;
                trees.insert(s, p);
            } else {
                return Err(SystemError::Parse(format!("unexpected line: {line}")));
            }
        }
        let height = height.ok_or_else(|| SystemError::Parse("missing height".into()))?;
        SplitSystem::from_table(height, trees)
    }
}

pub(crate) fn parse_two_quoted(rest: &str) -> Option<(String, String)> {
    // shared by the text formats of systems, names and scripts
    let mut parts = parse_quoted_list(rest);
    if parts.len() == 2 {
        let b = parts.pop().unwrap();
        let a = parts.pop().unwrap();
        Some((a, b))
    } else {
        None
    }
}

/// Extracts the double-quoted items of a line, in order.
pub fn parse_quoted_list(rest: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut chars = rest.chars();
    loop {
        match chars.find(|&c| c == '"') {
            None => return out,
            Some(_) => {
                let mut item = String::new();
                for c in chars.by_ref() {
                    if c == '"' {
                        break;
                    }
                    item.push(c);
                }
                out.push(item);
            }
        }
    }
}

/// The triple property of the extension calculus: a reduction of a proper
/// extension is still a proper extension. Evaluated, not assumed.
pub fn sys3_check(phi: &SplitSystem, psi: &SplitSystem, psi2: &SplitSystem) -> bool {
    if psi.properly_extends(phi) && psi2.reduces(psi) {
        psi2.properly_extends(phi)
    } else {
        true
    }
}

/// A finite-support sequence of splitting systems. Coordinates outside the
/// stored map hold the empty system.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct MultiSystem {
    entries: BTreeMap<usize, SplitSystem>,
}

impl MultiSystem {
    pub fn empty() -> Self {
        MultiSystem {
            entries: BTreeMap::new(),
        }
    }

    /// Coordinates carrying a non-empty system.
    pub fn support(&self) -> Vec<usize> {
        self.entries.keys().copied().collect()
    }

    pub fn get(&self, k: usize) -> Option<&SplitSystem> {
        self.entries.get(&k)
    }

    pub fn height_at(&self, k: usize) -> usize {
        self.entries.get(&k).map_or(0, SplitSystem::height)
    }

    /// Returns a copy with coordinate `k` replaced. Empty systems are not
    /// stored.
    pub fn with_coord(&self, k: usize, sys: SplitSystem) -> MultiSystem {
        let mut entries = self.entries.clone();
        if sys.is_empty() {
            entries.remove(&k);
        } else {
            entries.insert(k, sys);
        }
        MultiSystem { entries }
    }

    /// Coordinatewise extension order.
    pub fn extends(&self, other: &MultiSystem) -> bool {
        other
            .entries
            .iter()
            .all(|(k, sys)| self.entries.get(k).is_some_and(|mine| mine.extends(sys)))
    }

    /// Strict coordinatewise extension on the other's support.
    pub fn properly_extends(&self, other: &MultiSystem) -> bool {
        other.entries.keys().all(|k| self.entries.contains_key(k))
            && other
                .entries
                .iter()
                .all(|(k, sys)| self.entries[k].properly_extends(sys))
    }

    /// Coordinatewise reduction on the other's support.
    pub fn reduces(&self, other: &MultiSystem) -> bool {
        other
            .entries
            .iter()
            .all(|(k, sys)| self.entries.get(k).is_some_and(|mine| mine.reduces(sys)))
    }

    /// Extends every supported coordinate by one layer; the result properly
    /// extends the input (vacuously so for empty support).
    pub fn proper_extension(&self) -> MultiSystem {
        let entries = self
            .entries
            .iter()
            .map(|(k, sys)| (*k, sys.extend()))
            .collect();
        MultiSystem { entries }
    }
}

impl fmt::Display for MultiSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "multisystem")?;
        for (k, sys) in &self.entries {
            writeln!(f, "coord {k} height {}", sys.height())?;
            for (s, t) in sys.table() {
                writeln!(f, "node {k} \"{s}\" \"{t}\"")?;
            }
        }
        write!(f, "end")
    }
}

impl FromStr for MultiSystem {
    type Err = SystemError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut heights: BTreeMap<usize, usize> = BTreeMap::new();
        let mut tables: BTreeMap<usize, BTreeMap<BitString, SilverPattern>> = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line == "multisystem" || line == "end" || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("coord ") {
                let mut words = rest.split_whitespace();
                let k: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| SystemError::Parse(format!("bad coord line: {line}")))?;
                let height: usize = match (words.next(), words.next()) {
                    (Some("height"), Some(h)) => h
                        .parse()
                        .map_err(|e| SystemError::Parse(format!("height: {e}")))?,
                    _ => return Err(SystemError::Parse(format!("bad coord line: {line}"))),
                };
                heights.insert(k, height);
            } else if let Some(rest) = line.strip_prefix("node ") {
                let mut words = rest.splitn(2, ' ');
                let k: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| SystemError::Parse(format!("bad node line: {line}")))?;
                let rest = words.next().unwrap_or("");
                let (index, pattern) = parse_two_quoted(rest)
                    .ok_or_else(|| SystemError::Parse(format!("bad node line: {line}")))?;
                let s: BitString = index
                    .parse()
                    .map_err(|e| SystemError::Parse(format!("index: {e}")))?;
                let p: SilverPattern = pattern
                    .parse()
                    .map_err(|e| SystemError::Parse(format!("pattern: {e}")))?;
                tables.entry(k).or_default().insert(s, p);
            } else {
                return Err(SystemError::Parse(format!("unexpected line: {line}")));
            }
        }
        let mut out = MultiSystem::empty();
        for (k, height) in heights {
            let table = tables.remove(&k).unwrap_or_default();
            out = out.with_coord(k, SplitSystem::from_table(height, table)?);
        }
        if let Some(k) = tables.keys().next() {
            return Err(SystemError::Parse(format!(
                "node lines for coordinate {k} without a coord header"
            )));
        }
        Ok(out)
    }
}

/// Whether a fusion answer is final for its depth or may still change as the
/// chain grows.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Certificate {
    Stable,
    Provisional,
}

/// A membership answer for a fusion limit, together with its certificate.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct FusionAnswer {
    pub member: bool,
    pub certificate: Certificate,
}

/// A finite chain of multisystems approximating a fusion limit.
///
/// Consecutive stages must either extend or reduce each other coordinatewise;
/// heights never decrease. Reductions touch only top layers, so membership
/// below the current top stem depth is already final — a reduce step cannot
/// reset it.
#[derive(Clone, Debug, Default)]
pub struct FusionChain {
    stages: Vec<MultiSystem>,
}

impl FusionChain {
    pub fn new(initial: MultiSystem) -> Self {
        FusionChain {
            stages: vec![initial],
        }
    }

    pub fn stages(&self) -> &[MultiSystem] {
        &self.stages
    }

    pub fn last(&self) -> &MultiSystem {
        self.stages.last().expect("chains are non-empty")
    }

    /// Appends a stage after checking the chain order coordinatewise.
    pub fn push(&mut self, stage: MultiSystem) -> Result<(), SystemError> {
        let prev = self.last();
        for k in prev.support() {
            let old = prev.get(k).unwrap();
            match stage.get(k) {
                None => {
                    return Err(SystemError::ChainOrder {
                        coord: k,
                        detail: "coordinate dropped".into(),
                    })
                }
                Some(new) => {
                    if !(new.extends(old) || new.reduces(old)) {
                        return Err(SystemError::ChainOrder {
                            coord: k,
                            detail: "neither an extension nor a reduction".into(),
                        });
                    }
                }
            }
        }
        self.stages.push(stage);
        Ok(())
    }

    /// Extends one coordinate by a layer (seeding it with the full tree when
    /// absent) and records the stage.
    pub fn step_extend(&mut self, k: usize) -> Result<(), SystemError> {
        let cur = self.last().clone();
        let sys = match cur.get(k) {
            None => SplitSystem::seed(SilverPattern::full()),
            Some(sys) => sys.extend(),
        };
        self.push(cur.with_coord(k, sys))
    }

    /// Seeds a coordinate with an explicit root tree.
    pub fn step_seed(&mut self, k: usize, tree: SilverPattern) -> Result<(), SystemError> {
        let cur = self.last().clone();
        if cur.height_at(k) != 0 {
            return Err(SystemError::ChainOrder {
                coord: k,
                detail: "coordinate already seeded".into(),
            });
        }
        self.push(cur.with_coord(k, SplitSystem::seed(tree)))
    }

    /// Reduces the top layer of one coordinate around `s0`.
    pub fn step_reduce(
        &mut self,
        k: usize,
        s0: &BitString,
        tree: &SilverPattern,
    ) -> Result<(), SystemError> {
        let cur = self.last().clone();
        let sys = cur
            .get(k)
            .ok_or(SystemError::CoordinateAbsent(k))?
            .reduce_at(s0, tree)?;
        self.push(cur.with_coord(k, sys))
    }

    /// Extends every supported coordinate by one layer.
    pub fn step_extend_all(&mut self) -> Result<(), SystemError> {
        let next = self.last().proper_extension();
        self.push(next)
    }

    fn coord_final(&self, k: usize) -> Result<&SplitSystem, SystemError> {
        self.last().get(k).ok_or(SystemError::CoordinateAbsent(k))
    }

    fn layer_union_contains(
        sys: &SplitSystem,
        n: usize,
        index_prefix: &BitString,
        t: &BitString,
    ) -> bool {
        BitString::all_of_length(n - index_prefix.len())
            .iter()
            .map(|ext| index_prefix.concat(ext))
            .any(|v| sys.tree(&v).contains(t))
    }

    fn member_in_stage(sys: &SplitSystem, index: &BitString, t: &BitString) -> Option<bool> {
        if sys.height() <= index.len() {
            return None;
        }
        Some(
            (index.len()..sys.height())
                .all(|n| Self::layer_union_contains(sys, n, index, t)),
        )
    }

    /// Decides membership of `t` in the fusion limit below coordinate `k`,
    /// index `s`. The answer is read from the last stage; the certificate is
    /// `Stable` once some stage's top stems reach `|t|` and every later stage
    /// agrees.
    pub fn fusion_member(
        &self,
        k: usize,
        s: &BitString,
        t: &BitString,
    ) -> Result<FusionAnswer, SystemError> {
        let last = self.coord_final(k)?;
        let member = Self::member_in_stage(last, s, t).unwrap_or(true);
        let mut first_decisive = None;
        for (j, stage) in self.stages.iter().enumerate() {
            let Some(sys) = stage.get(k) else { continue };
            if sys.height() > s.len() && sys.top_stem_len() >= t.len() {
                first_decisive = Some(j);
                break;
            }
        }
        let certificate = match first_decisive {
            None => Certificate::Provisional,
            Some(j0) => {
                let agree = self.stages[j0..].iter().all(|stage| {
                    stage
                        .get(k)
                        .and_then(|sys| Self::member_in_stage(sys, s, t))
                        .is_none_or(|ans| ans == member)
                });
                if agree {
                    Certificate::Stable
                } else {
                    Certificate::Provisional
                }
            }
        };
        Ok(FusionAnswer {
            member,
            certificate,
        })
    }

    /// The depth-`d` window of the fusion limit, materialized node by node.
    /// Requires stability at depth `d`.
    pub fn fusion_truncate(
        &self,
        k: usize,
        s: &BitString,
        d: usize,
    ) -> Result<TruncatedTree, SystemError> {
        let sys = self.coord_final(k)?;
        if sys.height() <= s.len() {
            return Err(SystemError::InsufficientStages {
                needed: s.len() + 1,
                have: sys.height(),
            });
        }
        if sys.top_stem_len() < d {
            return Err(SystemError::InsufficientStages {
                needed: d,
                have: sys.top_stem_len(),
            });
        }
        let mut nodes = BTreeSet::new();
        for t in BitString::all_up_to(d) {
            if self.fusion_member(k, s, &t)?.member {
                nodes.insert(t);
            }
        }
        Ok(TruncatedTree::from_parts(d, nodes))
    }

    /// The fusion limit as a pattern valid to depth `d`: free exactly at the
    /// realized split positions above `|s|`, with `s`'s digits pinned at the
    /// splits below.
    pub fn fusion_pattern(
        &self,
        k: usize,
        s: &BitString,
        d: usize,
    ) -> Result<SilverPattern, SystemError> {
        let sys = self.coord_final(k)?;
        let m = sys.height();
        if m <= s.len() {
            return Err(SystemError::InsufficientStages {
                needed: s.len() + 1,
                have: m,
            });
        }
        let depths = sys.split_depths();
        let top = *depths.last().unwrap();
        if top < d {
            return Err(SystemError::InsufficientStages {
                needed: d,
                have: top,
            });
        }
        let mut deep_index = s.clone();
        while deep_index.len() < m - 1 {
            deep_index.push(false);
        }
        let deep_stem = sys.stem_of(&deep_index);
        let mut slots = Vec::with_capacity(d);
        for j in 0..d {
            let split_layer = depths.iter().position(|&h| h == j);
            let slot = match split_layer {
                Some(layer) if layer >= s.len() && layer < m - 1 => Slot::Free,
                _ => Slot::Fixed(deep_stem.bit(j)),
            };
            slots.push(slot);
        }
        Ok(SilverPattern::new(slots))
    }
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

    fn full_system_h2() -> SplitSystem {
        SplitSystem::seed(SilverPattern::full()).extend()
    }

    #[test]
    fn seed_and_validate() {
        let sys = SplitSystem::seed(SilverPattern::full());
        assert!(sys.validate(&Ambient::All).all_hold());
        let sys = SplitSystem::seed(pat("01*"));
        assert!(sys.validate(&Ambient::All).all_hold());
    }

    #[test]
    fn extend_full() {
        let sys = full_system_h2();
        assert_eq!(sys.height(), 2);
        assert_eq!(sys.tree(&bs("0")), &pat("0"));
        assert_eq!(sys.tree(&bs("1")), &pat("1"));
        assert!(sys.validate(&Ambient::All).all_hold());
        assert_eq!(sys.split_depths(), vec![0, 1]);
    }

    #[test]
    fn extend_seeded() {
        let sys = SplitSystem::seed(pat("0*")).extend();
        assert_eq!(sys.tree(&bs("0")), &pat("00"));
        assert_eq!(sys.tree(&bs("1")), &pat("01"));
        assert_eq!(sys.split_depths(), vec![1, 2]);
        assert!(sys.validate(&Ambient::All).all_hold());
    }

    #[test]
    fn extend_twice_from_full() {
        let sys = full_system_h2().extend();
        assert_eq!(sys.height(), 3);
        assert_eq!(sys.split_depths(), vec![0, 1, 2]);
        let layer: Vec<String> = BitString::all_of_length(2)
            .iter()
            .map(|s| sys.tree(s).to_string())
            .collect();
        assert_eq!(layer, vec!["00", "01", "10", "11"]);
        assert!(sys.validate(&Ambient::All).all_hold());
    }

    #[test]
    fn validator_catches_bad_child() {
        // both children assigned below the same stem extension
        let mut trees = BTreeMap::new();
        trees.insert(BitString::empty(), SilverPattern::full());
        trees.insert(bs("0"), pat("0"));
        trees.insert(bs("1"), pat("0"));
        let sys = SplitSystem::from_table(2, trees).unwrap();
        let report = sys.validate(&Ambient::All);
        assert!(!report.all_hold());
        assert_eq!(report.first_violation().unwrap().name, "child-restriction");
    }

    #[test]
    fn reduce_transplants_whole_layer() {
        let sys = full_system_h2();
        let reduced = sys.reduce_at(&bs("0"), &pat("00")).unwrap();
        assert_eq!(reduced.tree(&bs("0")), &pat("00"));
        assert_eq!(reduced.tree(&bs("1")), &pat("10"));
        assert_eq!(reduced.tree(&BitString::empty()), &SilverPattern::full());
        assert!(reduced.validate(&Ambient::All).all_hold());
        assert!(reduced.reduces(&sys));
    }

    #[test]
    fn reduce_by_own_tree_is_identity() {
        let sys = full_system_h2();
        let same = sys.reduce_at(&bs("1"), &pat("1")).unwrap();
        assert_eq!(same, sys);
    }

    #[test]
    fn reduce_rejects_foreign_tree() {
        let sys = full_system_h2();
        assert!(matches!(
            sys.reduce_at(&bs("1"), &pat("0*")),
            Err(SystemError::NotASubtree { .. })
        ));
    }

    #[test]
    fn orders() {
        let small = SplitSystem::seed(SilverPattern::full());
        let big = small.extend();
        assert!(big.extends(&small));
        assert!(big.properly_extends(&small));
        assert!(small.extends(&small));
        assert!(!small.properly_extends(&small));
        assert!(small.reduces(&small));
        let reduced = big.reduce_at(&bs("0"), &pat("00")).unwrap();
        assert!(reduced.reduces(&big));
        assert!(!reduced.extends(&big));
    }

    #[test]
    fn sys3_on_generated_triple() {
        let phi = SplitSystem::seed(SilverPattern::full());
        let psi = phi.extend();
        let psi2 = psi.reduce_at(&bs("0"), &pat("00")).unwrap();
        assert!(psi2.properly_extends(&phi));
        assert!(sys3_check(&phi, &psi, &psi2));
        assert!(sys3_check(&phi, &phi, &phi)); // vacuous
    }

    #[test]
    fn union_top_examples() {
        assert_eq!(full_system_h2().union_top(), SilverPattern::full());
        let sys = SplitSystem::seed(pat("0*")).extend();
        assert_eq!(sys.union_top(), pat("0"));
        let reduced = full_system_h2().reduce_at(&bs("0"), &pat("00")).unwrap();
        assert_eq!(reduced.union_top(), pat("*0"));
    }

    #[test]
    fn action_equivariance_of_validity() {
        let sys = SplitSystem::seed(pat("0*1")).extend().extend();
        for sigma in BitString::all_up_to(3) {
            assert!(sys.act(&sigma).validate(&Ambient::All).all_hold());
        }
    }

    #[test]
    fn multi_orders() {
        let psi = MultiSystem::empty().with_coord(0, SplitSystem::seed(SilverPattern::full()));
        let phi = psi.with_coord(0, psi.get(0).unwrap().extend());
        assert!(phi.extends(&psi));
        assert!(phi.properly_extends(&psi));
        assert!(psi.extends(&psi));
        assert!(!psi.properly_extends(&psi));
        let ext = psi.proper_extension();
        assert!(ext.properly_extends(&psi));
        // empty support extends properly in the vacuous sense
        let empty = MultiSystem::empty();
        assert!(empty.proper_extension().properly_extends(&empty));
    }

    #[test]
    fn multi_reduce() {
        let base = MultiSystem::empty()
            .with_coord(0, full_system_h2())
            .with_coord(2, SplitSystem::seed(pat("1")));
        let reduced = base.with_coord(
            0,
            base.get(0).unwrap().reduce_at(&bs("0"), &pat("00")).unwrap(),
        );
        assert!(reduced.reduces(&base));
    }

    #[test]
    fn chain_membership_pure_extends() {
        let mut chain = FusionChain::new(MultiSystem::empty());
        chain.step_extend(0).unwrap(); // seed full
        chain.step_extend(0).unwrap();
        chain.step_extend(0).unwrap();
        for t in BitString::all_up_to(2) {
            let ans = chain.fusion_member(0, &BitString::empty(), &t).unwrap();
            assert!(ans.member);
            assert_eq!(ans.certificate, Certificate::Stable);
        }
    }

    #[test]
    fn chain_membership_seeded() {
        let mut chain = FusionChain::new(MultiSystem::empty());
        chain.step_seed(0, pat("0")).unwrap();
        chain.step_extend(0).unwrap();
        chain.step_extend(0).unwrap();
        let ans = chain.fusion_member(0, &BitString::empty(), &bs("10")).unwrap();
        assert!(!ans.member);
        assert_eq!(ans.certificate, Certificate::Stable);
    }

    #[test]
    fn chain_with_reduce_stays_stable_below_top() {
        let mut chain = FusionChain::new(MultiSystem::empty());
        chain.step_extend(0).unwrap();
        chain.step_extend(0).unwrap(); // height 2, stems 0|1
        chain.step_reduce(0, &bs("0"), &pat("00")).unwrap();
        chain.step_extend(0).unwrap();
        // depth-1 membership was decided before the reduce and must not move
        for t in [bs("0"), bs("1")] {
            let ans = chain.fusion_member(0, &BitString::empty(), &t).unwrap();
            assert!(ans.member);
            assert_eq!(ans.certificate, Certificate::Stable);
        }
        // the reduce pinned digit 1 to the stem digit of the transplant
        assert!(!chain.fusion_member(0, &BitString::empty(), &bs("01")).unwrap().member);
        assert!(chain.fusion_member(0, &BitString::empty(), &bs("00")).unwrap().member);
    }

    #[test]
    fn fusion_pattern_matches_membership() {
        let mut chain = FusionChain::new(MultiSystem::empty());
        chain.step_extend(0).unwrap();
        chain.step_extend(0).unwrap();
        chain.step_reduce(0, &bs("0"), &pat("00")).unwrap();
        chain.step_extend(0).unwrap();
        chain.step_extend(0).unwrap();
        let depth = chain.last().get(0).unwrap().top_stem_len();
        let pattern = chain.fusion_pattern(0, &BitString::empty(), depth).unwrap();
        for t in BitString::all_up_to(depth) {
            let member = chain.fusion_member(0, &BitString::empty(), &t).unwrap().member;
            assert_eq!(member, pattern.contains(&t), "node {t}");
        }
    }

    #[test]
    fn fusion_truncate_validates() {
        let mut chain = FusionChain::new(MultiSystem::empty());
        chain.step_seed(0, pat("0")).unwrap();
        chain.step_extend(0).unwrap();
        chain.step_extend(0).unwrap();
        let w = chain.fusion_truncate(0, &BitString::empty(), 2).unwrap();
        assert!(crate::trees::validate_silver_truncated(&w));
        assert!(matches!(
            chain.fusion_truncate(0, &BitString::empty(), 50),
            Err(SystemError::InsufficientStages { .. })
        ));
        assert!(matches!(
            chain.fusion_truncate(3, &BitString::empty(), 1),
            Err(SystemError::CoordinateAbsent(3))
        ));
    }

    #[test]
    fn chain_rejects_disorder() {
        let mut chain = FusionChain::new(MultiSystem::empty());
        chain.step_extend(0).unwrap();
        chain.step_extend(0).unwrap();
        let foreign = MultiSystem::empty().with_coord(0, SplitSystem::seed(pat("1")));
        assert!(matches!(
            chain.push(foreign),
            Err(SystemError::ChainOrder { .. })
        ));
    }

    #[test]
    fn serialization_round_trip() {
        let sys = SplitSystem::seed(pat("0*1")).extend();
        let text = sys.to_string();
        let back: SplitSystem = text.parse().unwrap();
        assert_eq!(back, sys);
        let multi = MultiSystem::empty()
            .with_coord(0, sys)
            .with_coord(3, SplitSystem::seed(SilverPattern::full()));
        let back: MultiSystem = multi.to_string().parse().unwrap();
        assert_eq!(back, multi);
    }
}
