//! Real names, decidable direct forcing, and the avoidance constructions.
//!
//! A real name codes a point of Cantor space digit by digit: for each digit
//! it carries two cross-incompatible sets of trees, one per value. A tree
//! *directly forces* digit `n` to be `i` when it is covered by the union of
//! the `(n, i)` class; prefix, inequality and avoidance forcing build on
//! that. All four predicates are decidable on pattern trees, monotone under
//! the subtree order, and equivariant under the xor action, which is what
//! the shrink-and-avoid constructions in this module exploit.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::strings::BitString;
use crate::systems::{parse_quoted_list, MultiSystem, SystemError};
use crate::trees::SilverPattern;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NameError {
    #[error("classes for digit {n} are not cross-incompatible: {s} meets {t}")]
    CrossIncompatible { n: usize, s: String, t: String },
    #[error("no member of either digit class is compatible below the tree at digit {digit}")]
    NoCompatibleMember { digit: usize },
    #[error("the tree does not directly force the shifted name away from the canonical one")]
    NotDirectlyForcedNeq,
    #[error("no dense selection below the required tree: {0}")]
    DensityFailure(String),
    #[error("digit {asked} is beyond the name bound {bound}")]
    BeyondBound { asked: usize, bound: usize },
    #[error("filter chain entry {entry} is not below its predecessor")]
    ChainNotDecreasing { entry: usize },
    #[error(transparent)]
    System(#[from] SystemError),
}

/// A bounded real name: for each digit below the bound, two finite sets of
/// pattern trees, one per digit value.
///
/// Cross-incompatibility of the two classes of a digit is an invariant
/// enforced at construction; pre-density of their union is not — it is
/// checked against a declared tree family by [`RealName::class_predense`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RealName {
    classes: Vec<[Vec<SilverPattern>; 2]>,
}

impl RealName {
    pub fn new(classes: Vec<[Vec<SilverPattern>; 2]>) -> Result<Self, NameError> {
        for (n, pair) in classes.iter().enumerate() {
            for s in &pair[0] {
                for t in &pair[1] {
                    if s.intersect(t).is_some() {
                        return Err(NameError::CrossIncompatible {
                            n,
                            s: s.to_string(),
                            t: t.to_string(),
                        });
                    }
                }
            }
        }
        Ok(RealName { classes })
    }

    /// The name of the point the forcing itself adds: the `(n, i)` class
    /// holds the single tree fixing position `n` to `i`.
    pub fn canonical(bound: usize) -> Self {
        let classes = (0..bound)
            .map(|n| {
                [
                    vec![SilverPattern::fixing(n, false)],
                    vec![SilverPattern::fixing(n, true)],
                ]
            })
            .collect();
        RealName { classes }
    }

    /// The name of a fixed point: every tree forces digit `n` to `z(n)`;
    /// digits beyond `|z|` read 0.
    pub fn constant(z: &BitString, bound: usize) -> Self {
        let classes = (0..bound)
            .map(|n| {
                if z.get(n).unwrap_or(false) {
                    [Vec::new(), vec![SilverPattern::full()]]
                } else {
                    [vec![SilverPattern::full()], Vec::new()]
                }
            })
            .collect();
        RealName { classes }
    }

    pub fn bound(&self) -> usize {
        self.classes.len()
    }

    /// The `(n, i)` class.
    pub fn class(&self, n: usize, i: bool) -> &[SilverPattern] {
        &self.classes[n][usize::from(i)]
    }

    /// Both classes of digit `n` together.
    pub fn digit_classes(&self, n: usize) -> impl Iterator<Item = &SilverPattern> {
        self.classes[n][0].iter().chain(&self.classes[n][1])
    }

    /// Shift by the xor action: every member tree is acted on. The
    /// cross-incompatibility invariant survives because the action is an
    /// automorphism of the pattern family.
    pub fn shift(&self, sigma: &BitString) -> RealName {
        let classes = self
            .classes
            .iter()
            .map(|pair| {
                [
                    pair[0].iter().map(|t| t.act(sigma)).collect(),
                    pair[1].iter().map(|t| t.act(sigma)).collect(),
                ]
            })
            .collect();
        RealName { classes }
    }

    /// Pre-density of the digit-`n` classes within `family`: every listed
    /// tree must be compatible with some class member.
    pub fn class_predense(&self, n: usize, family: &[SilverPattern]) -> bool {
        family
            .iter()
            .all(|t| self.digit_classes(n).any(|s| t.intersect(s).is_some()))
    }
}

impl fmt::Display for RealName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "name bound {}", self.bound())?;
        for (n, pair) in self.classes.iter().enumerate() {
            for (i, class) in pair.iter().enumerate() {
                if class.is_empty() {
                    continue;
                }
                let members: Vec<String> = class.iter().map(|p| format!("\"{p}\"")).collect();
                writeln!(f, "class {n} {i} {}", members.join(" "))?;
            }
        }
        write!(f, "end")
    }
}

impl FromStr for RealName {
    type Err = NameError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let parse_err = |detail: String| NameError::System(SystemError::Parse(detail));
        let mut bound = 0usize;
        let mut table: BTreeMap<(usize, usize), Vec<SilverPattern>> = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line == "end" || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("name bound ") {
                bound = rest
                    .trim()
                    .parse()
                    .map_err(|e| parse_err(format!("bound: {e}")))?;
            } else if let Some(rest) = line.strip_prefix("class ") {
                let mut words = rest.splitn(3, ' ');
                let n: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| parse_err(format!("bad class line: {line}")))?;
                let i: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .filter(|&i| i < 2)
                    .ok_or_else(|| parse_err(format!("bad class line: {line}")))?;
                let mut members = Vec::new();
                for item in parse_quoted_list(words.next().unwrap_or("")) {
                    members.push(
                        item.parse::<SilverPattern>()
                            .map_err(|e| parse_err(format!("pattern: {e}")))?,
                    );
                }
                table.insert((n, i), members);
            } else {
                return Err(parse_err(format!("unexpected line: {line}")));
            }
        }
        let mut classes = vec![[Vec::new(), Vec::new()]; bound];
        for ((n, i), members) in table {
            if n >= bound {
                return Err(NameError::BeyondBound { asked: n, bound });
            }
            classes[n][i] = members;
        }
        RealName::new(classes)
    }
}

/// The digit `tree` directly forces at position `n`, if any: the unique `i`
/// with `tree` covered by the union of the `(n, i)` class. Uniqueness is a
/// consequence of cross-incompatibility.
pub fn df_value(tree: &SilverPattern, name: &RealName, n: usize) -> Option<bool> {
    let zero = tree.subset_of_union(name.class(n, false));
    let one = tree.subset_of_union(name.class(n, true));
    debug_assert!(
        !(zero && one),
        "cross-incompatible classes cannot both cover {tree}"
    );
    match (zero, one) {
        (true, _) => Some(false),
        (_, true) => Some(true),
        _ => None,
    }
}

/// The longest prefix whose digits are all directly forced, up to the bound.
pub fn forced_prefix(tree: &SilverPattern, name: &RealName) -> BitString {
    let mut bits = Vec::new();
    for n in 0..name.bound() {
        match df_value(tree, name, n) {
            Some(d) => bits.push(d),
            None => break,
        }
    }
    BitString::from_bits(bits)
}

/// Whether `tree` directly forces every digit of `s`.
pub fn df_prefix(tree: &SilverPattern, name: &RealName, s: &BitString) -> bool {
    (0..s.len()).all(|n| n < name.bound() && df_value(tree, name, n) == Some(s.bit(n)))
}

/// Direct forcing of inequality: two incomparable strings, one forced as a
/// prefix of each name. Returns the witnesses cut at the least digit where
/// the maximal forced prefixes diverge.
pub fn df_neq(tree: &SilverPattern, c: &RealName, d: &RealName) -> Option<(BitString, BitString)> {
    let pc = forced_prefix(tree, c);
    let pd = forced_prefix(tree, d);
    let j = (0..pc.len().min(pd.len())).find(|&j| pc.bit(j) != pd.bit(j))?;
    Some((pc.truncated(j + 1), pd.truncated(j + 1)))
}

/// Direct forcing of avoidance: the shortest forced prefix of the name that
/// is not a node of `avoided`.
pub fn df_notin(
    tree: &SilverPattern,
    name: &RealName,
    avoided: &SilverPattern,
) -> Option<BitString> {
    df_notin_all(tree, name, std::slice::from_ref(avoided))
}

/// Avoidance of a finite union: the shortest forced prefix outside every
/// part.
pub fn df_notin_all(
    tree: &SilverPattern,
    name: &RealName,
    parts: &[SilverPattern],
) -> Option<BitString> {
    let p = forced_prefix(tree, name);
    (1..=p.len())
        .map(|n| p.truncated(n))
        .find(|s| parts.iter().all(|part| !part.contains(s)))
}

/// Shrinks `tree` until it directly forces a prefix of length at least
/// `len`: digit by digit, the least forcible value wins and the first
/// compatible class member is intersected in. Fails with
/// [`NameError::NoCompatibleMember`] when neither class of some digit meets
/// the current tree — the signal that the digit classes are not pre-dense
/// below it.
pub fn force_long_prefix(
    tree: &SilverPattern,
    name: &RealName,
    len: usize,
    _fragment_hint: &[SilverPattern],
) -> Result<(SilverPattern, BitString), NameError> {
    force_prefix_with(tree, name, len, |_| None)
}

/// Like [`force_long_prefix`], but `target` may pin the digit to force at a
/// given position. Used by the avoidance searches that need a forced digit
/// to disagree with a tree position.
fn force_prefix_with(
    tree: &SilverPattern,
    name: &RealName,
    len: usize,
    target: impl Fn(usize) -> Option<bool>,
) -> Result<(SilverPattern, BitString), NameError> {
    let len = len.min(name.bound());
    let mut current = tree.clone();
    let mut forced = BitString::empty();
    for n in 0..len {
        if let Some(d) = df_value(&current, name, n) {
            if target(n).is_some_and(|want| want != d) {
                return Err(NameError::DensityFailure(format!(
                    "digit {n} is already forced to {}",
                    u8::from(d)
                )));
            }
            forced.push(d);
            continue;
        }
        let candidates: &[bool] = match target(n) {
            Some(true) => &[true],
            Some(false) => &[false],
            None => &[false, true],
        };
        let mut chosen = None;
        'digits: for &digit in candidates {
            for member in name.class(n, digit) {
                if let Some(meet) = current.intersect(member) {
                    chosen = Some((digit, meet));
                    break 'digits;
                }
            }
        }
        match chosen {
            Some((digit, meet)) => {
                current = meet;
                forced.push(digit);
            }
            None => return Err(NameError::NoCompatibleMember { digit: n }),
        }
    }
    debug_assert!(df_prefix(&current, name, &forced));
    Ok((current, forced))
}

/// The outcome of the finite-avoidance shrink: per-part shrunken trees, the
/// forcing tree, and the forced string witnessing avoidance of the union.
#[derive(Clone, Debug)]
pub struct ShrinkOutcome {
    pub shrunk: Vec<SilverPattern>,
    pub tree: SilverPattern,
    pub forced: BitString,
}

/// Shrinks each part around one of its nodes incomparable with a freshly
/// forced string, so the forcing tree directly forces the name out of the
/// union of the shrunken parts.
pub fn k1_shrink(
    parts: &[SilverPattern],
    tree: &SilverPattern,
    name: &RealName,
    fragment_hint: &[SilverPattern],
) -> Result<ShrinkOutcome, NameError> {
    let len = parts.iter().map(|p| p.stem().len()).max().unwrap_or(0) + 1;
    let (forcing, forced) = force_long_prefix(tree, name, len, fragment_hint)?;
    if forced.len() < len {
        return Err(NameError::DensityFailure(format!(
            "name bound {} too small to force past the part stems",
            name.bound()
        )));
    }
    let mut shrunk = Vec::with_capacity(parts.len());
    for part in parts {
        // least node of the part incomparable with the forced string
        let node = (0..=forced.len())
            .flat_map(BitString::all_of_length)
            .find(|u| part.contains(u) && u.incomparable(&forced))
            .expect("a perfect tree branches off any string longer than its stem");
        shrunk.push(part.restrict(&node).expect("node chosen inside the part"));
    }
    debug_assert!(parts.is_empty() || df_notin_all(&forcing, name, &shrunk).is_some());
    Ok(ShrinkOutcome {
        shrunk,
        tree: forcing,
        forced,
    })
}

/// Self-avoidance: given that the acted tree directly forces the shifted
/// name away from the canonical one, returns a subtree that directly forces
/// the name out of its own translate.
pub fn k2_avoid_self(
    tree: &SilverPattern,
    name: &RealName,
    sigma: &BitString,
    _fragment_hint: &[SilverPattern],
) -> Result<SilverPattern, NameError> {
    let acted_tree = tree.act(sigma);
    let shifted = name.shift(sigma);
    let canonical = RealName::canonical(name.bound());
    let (_, pi_witness) =
        df_neq(&acted_tree, &shifted, &canonical).ok_or(NameError::NotDirectlyForcedNeq)?;
    // a forced canonical prefix runs along the acted tree's fixed digits
    debug_assert!(acted_tree.contains(&pi_witness));
    let restricted = acted_tree
        .restrict(&pi_witness)
        .expect("forced canonical prefixes are nodes");
    let out = restricted.act(sigma);
    debug_assert!(df_notin(&out, name, &out.act(sigma)).is_some());
    Ok(out)
}

/// The avoidance condition realized on a multisystem: the witness index on
/// the carrier coordinate and the forced string taking the name outside the
/// top-layer union of the avoided coordinate.
#[derive(Clone, Debug)]
pub struct AvoidanceWitness {
    pub index: BitString,
    pub forced_out: BitString,
}

/// Checks the avoidance clauses on `multi`: some top index of coordinate
/// `carrier` properly extending `base_index` must hold a tree that directly
/// forces `name` out of the top-layer union of coordinate `avoided`.
pub fn avoidance_witness(
    multi: &MultiSystem,
    avoided: usize,
    carrier: usize,
    base_index: &BitString,
    name: &RealName,
) -> Option<AvoidanceWitness> {
    let avoided_sys = multi.get(avoided)?;
    let carrier_sys = multi.get(carrier)?;
    if carrier_sys.height() == 0 || avoided_sys.height() == 0 {
        return None;
    }
    let union = avoided_sys.union_top();
    for t in BitString::all_of_length(carrier_sys.height() - 1) {
        if !base_index.is_proper_prefix_of(&t) {
            continue;
        }
        if let Some(forced_out) = df_notin(carrier_sys.tree(&t), name, &union) {
            return Some(AvoidanceWitness {
                index: t,
                forced_out,
            });
        }
    }
    None
}

/// One avoidance step: properly extends the multisystem, then reduces the
/// fresh top layers so that a tree on the carrier coordinate directly forces
/// the name out of the avoided coordinate's top-layer union.
///
/// With distinct coordinates, a prefix is forced past the avoided layer's
/// stems and that layer is reduced below the digit the forced string misses.
/// With equal coordinates the layer to avoid is the carrier's own, whose
/// reduction transplants the forcing tree everywhere; the search pins a
/// digit where the forced value can disagree with the transplanted layer,
/// which is possible exactly when the name diverges from the canonical one
/// away from the split positions.
pub fn ka_step(
    multi: &MultiSystem,
    avoided: usize,
    carrier: usize,
    base_index: &BitString,
    name: &RealName,
    fragment_hint: &[SilverPattern],
) -> Result<MultiSystem, NameError> {
    if multi.get(avoided).is_none() {
        return Err(NameError::System(SystemError::CoordinateAbsent(avoided)));
    }
    if multi.height_at(carrier) <= base_index.len() {
        return Err(NameError::System(SystemError::InsufficientStages {
            needed: base_index.len() + 1,
            have: multi.height_at(carrier),
        }));
    }

    let grown = multi.proper_extension();
    let carrier_sys = grown.get(carrier).expect("carrier coordinate present");
    // least top index properly extending the base index
    let mut witness_index = base_index.clone();
    while witness_index.len() < carrier_sys.height() - 1 {
        witness_index.push(false);
    }
    let start = carrier_sys.tree(&witness_index).clone();

    if avoided != carrier {
        let avoided_sys = grown.get(avoided).expect("avoided coordinate present");
        let stem_depth = avoided_sys.top_stem_len();
        let (forcing, forced) = force_long_prefix(&start, name, stem_depth + 1, fragment_hint)?;
        if forced.len() <= stem_depth {
            return Err(NameError::DensityFailure(format!(
                "name bound {} too small to force past stem depth {stem_depth}",
                name.bound()
            )));
        }
        // reduce the avoided layer below the digit the forced string misses
        let top_first = BitString::from_bits(vec![false; avoided_sys.height() - 1]);
        let sample = avoided_sys.tree(&top_first);
        let pinned = sample
            .intersect(&SilverPattern::fixing(stem_depth, !forced.bit(stem_depth)))
            .expect("the stem depth is the first free position of a top-layer tree");
        let reduced_avoided = avoided_sys.reduce_at(&top_first, &pinned)?;
        let reduced_carrier = carrier_sys.reduce_at(&witness_index, &forcing)?;
        let out = grown
            .with_coord(avoided, reduced_avoided)
            .with_coord(carrier, reduced_carrier);
        debug_assert!(avoidance_witness(&out, avoided, carrier, base_index, name).is_some());
        return Ok(out);
    }

    // equal coordinates: the avoided union is the carrier's own top layer
    let depths = carrier_sys.split_depths();
    let stem_depth = *depths.last().unwrap();
    let mut found: Option<SilverPattern> = None;
    // fresh positions first: force digits up through j, then pin position j
    // of the tree to the opposite digit
    for j in stem_depth..name.bound() {
        if let Ok((forcing, forced)) = force_long_prefix(&start, name, j + 1, fragment_hint) {
            if forced.len() == j + 1 {
                if let Some(pinned) = forcing.intersect(&SilverPattern::fixing(j, !forced.bit(j)))
                {
                    found = Some(pinned);
                    break;
                }
            }
        }
    }
    if found.is_none() {
        // stem positions off the splits: force the digit opposite to the stem
        let stem = start.stem();
        for j in (0..stem_depth).filter(|j| !depths.contains(j)) {
            let want = !stem.bit(j);
            if let Ok((forcing, _)) =
                force_prefix_with(&start, name, j + 1, |n| (n == j).then_some(want))
            {
                found = Some(forcing);
                break;
            }
        }
    }
    let Some(final_tree) = found else {
        return Err(NameError::DensityFailure(
            "no digit of the name can be forced against the layer".into(),
        ));
    };
    let reduced = carrier_sys.reduce_at(&witness_index, &final_tree)?;
    let out = grown.with_coord(carrier, reduced);
    debug_assert!(avoidance_witness(&out, avoided, carrier, base_index, name).is_some());
    Ok(out)
}

/// A descending sequence of trees with a log of which pre-dense sets were
/// met on the way down — the working stand-in for a generic filter.
#[derive(Clone, Debug, Default)]
pub struct FilterChain {
    entries: Vec<SilverPattern>,
    met: Vec<MetEntry>,
}

/// One met-log record: the chain entry that got below some member of a named
/// pre-dense set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetEntry {
    pub label: String,
    pub entry: usize,
    pub member: SilverPattern,
}

impl FilterChain {
    pub fn new() -> Self {
        FilterChain::default()
    }

    pub fn from_entries(entries: Vec<SilverPattern>) -> Result<Self, NameError> {
        let mut chain = FilterChain::new();
        for t in entries {
            chain.push(t)?;
        }
        Ok(chain)
    }

    pub fn entries(&self) -> &[SilverPattern] {
        &self.entries
    }

    pub fn met_log(&self) -> &[MetEntry] {
        &self.met
    }

    pub fn last(&self) -> Option<&SilverPattern> {
        self.entries.last()
    }

    pub fn push(&mut self, tree: SilverPattern) -> Result<(), NameError> {
        if let Some(prev) = self.entries.last() {
            if !tree.is_subset(prev) {
                return Err(NameError::ChainNotDecreasing {
                    entry: self.entries.len(),
                });
            }
        }
        self.entries.push(tree);
        Ok(())
    }

    /// Records that the latest entry lies below `member` of the set `label`.
    pub fn record_met(&mut self, label: impl Into<String>, member: SilverPattern) {
        self.met.push(MetEntry {
            label: label.into(),
            entry: self.entries.len().saturating_sub(1),
            member,
        });
    }

    /// Descends through every digit class of the name in order, intersecting
    /// the first compatible member each time.
    pub fn descend_through(&mut self, name: &RealName) -> Result<(), NameError> {
        for n in 0..name.bound() {
            let current = self
                .entries
                .last()
                .cloned()
                .unwrap_or_else(SilverPattern::full);
            let member = name
                .digit_classes(n)
                .find(|m| current.intersect(m).is_some())
                .cloned()
                .ok_or(NameError::NoCompatibleMember { digit: n })?;
            let next = current.intersect(&member).unwrap();
            self.push(next)?;
            self.record_met(format!("C_{n}"), member);
        }
        Ok(())
    }
}

impl fmt::Display for FilterChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "chain")?;
        for t in &self.entries {
            writeln!(f, "entry \"{t}\"")?;
        }
        for m in &self.met {
            writeln!(f, "met \"{}\" {} \"{}\"", m.label, m.entry, m.member)?;
        }
        write!(f, "end")
    }
}

/// Evaluates a name along a filter chain: digit `n` is defined when some
/// chain entry lies below a member of one of the digit classes. Returns the
/// defined prefix.
pub fn eval_name(chain: &FilterChain, name: &RealName) -> BitString {
    let mut bits = Vec::new();
    'digits: for n in 0..name.bound() {
        for digit in [false, true] {
            let hit = name
                .class(n, digit)
                .iter()
                .any(|member| chain.entries().iter().any(|t| t.is_subset(member)));
            if hit {
                bits.push(digit);
                continue 'digits;
            }
        }
        break;
    }
    BitString::from_bits(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::SplitSystem;

    fn pat(s: &str) -> SilverPattern {
        s.parse().unwrap()
    }

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    /// Digit 0 of this name reads the opposite of tree position 0; the other
    /// digits are canonical.
    fn flipped_digit_name(bound: usize) -> RealName {
        RealName::canonical(bound).shift(&bs("1"))
    }

    #[test]
    fn canonical_classes() {
        let c = RealName::canonical(3);
        assert_eq!(c.class(2, true), &[pat("**1")]);
        assert_eq!(c.class(0, false), &[pat("0")]);
    }

    #[test]
    fn constructor_rejects_overlap() {
        let bad = RealName::new(vec![[vec![pat("0")], vec![pat("0*")]]]);
        assert!(matches!(bad, Err(NameError::CrossIncompatible { .. })));
    }

    #[test]
    fn shift_relabels_digit_classes() {
        let c = flipped_digit_name(2);
        assert_eq!(c.class(0, true), &[pat("0")]);
        assert_eq!(c.class(0, false), &[pat("1")]);
        assert_eq!(c.class(1, false), &[pat("*0")]);
        assert_eq!(c.shift(&bs("1")), RealName::canonical(2));
    }

    #[test]
    fn df_value_examples() {
        let canonical = RealName::canonical(3);
        assert_eq!(df_value(&pat("**1"), &canonical, 2), Some(true));
        assert_eq!(
            df_value(&SilverPattern::full(), &RealName::canonical(1), 0),
            None
        );
        let c = flipped_digit_name(1);
        assert_eq!(df_value(&pat("0"), &c, 0), Some(true));
    }

    #[test]
    fn df_prefix_examples() {
        let canonical = RealName::canonical(2);
        assert!(df_prefix(&pat("01"), &canonical, &bs("01")));
        assert!(!df_prefix(&pat("01"), &canonical, &bs("1")));
        assert!(df_prefix(&pat("01"), &canonical, &BitString::empty()));
    }

    #[test]
    fn df_neq_examples() {
        let c = flipped_digit_name(1);
        let canonical = RealName::canonical(1);
        assert_eq!(df_neq(&pat("0"), &c, &canonical), Some((bs("1"), bs("0"))));
        assert_eq!(df_neq(&pat("0"), &c, &c), None);
        assert_eq!(df_neq(&SilverPattern::full(), &c, &canonical), None);
    }

    #[test]
    fn df_notin_examples() {
        let canonical = RealName::canonical(3);
        // the tree 10 forces the prefix 10; already its first digit leaves 0*
        assert_eq!(df_notin(&pat("10"), &canonical, &pat("0")), Some(bs("1")));
        assert_eq!(
            df_notin(&pat("10"), &canonical, &SilverPattern::full()),
            None
        );
        assert_eq!(df_notin(&SilverPattern::full(), &canonical, &pat("0")), None);
    }

    #[test]
    fn force_long_prefix_examples() {
        let canonical = RealName::canonical(2);
        let (tree, s) = force_long_prefix(&SilverPattern::full(), &canonical, 2, &[]).unwrap();
        assert_eq!((tree.to_string().as_str(), s.clone()), ("00", bs("00")));
        let (tree, s) = force_long_prefix(&pat("1"), &canonical, 1, &[]).unwrap();
        assert_eq!(s, bs("1"));
        assert!(tree.is_subset(&pat("1")));
        let lopsided = RealName::new(vec![[vec![pat("0")], vec![]]]).unwrap();
        assert_eq!(
            force_long_prefix(&pat("1"), &lopsided, 1, &[]),
            Err(NameError::NoCompatibleMember { digit: 0 })
        );
    }

    #[test]
    fn k1_worked_example() {
        let canonical = RealName::canonical(3);
        let out = k1_shrink(&[pat("0")], &pat("1"), &canonical, &[]).unwrap();
        assert_eq!(out.forced, bs("10"));
        assert!(out.tree.is_subset(&pat("10")));
        assert_eq!(out.shrunk, vec![pat("0")]);
        assert!(df_notin_all(&out.tree, &canonical, &out.shrunk).is_some());
    }

    #[test]
    fn k1_degenerate() {
        let canonical = RealName::canonical(3);
        let out = k1_shrink(&[], &SilverPattern::full(), &canonical, &[]).unwrap();
        assert!(out.shrunk.is_empty());
        assert_eq!(out.forced.len(), 1);
    }

    #[test]
    fn k2_worked_example() {
        let c = flipped_digit_name(1);
        let s = k2_avoid_self(&pat("0"), &c, &BitString::empty(), &[]).unwrap();
        assert_eq!(s, pat("0"));
        assert_eq!(df_notin(&s, &c, &s), Some(bs("1")));
    }

    #[test]
    fn k2_requires_divergence() {
        let canonical = RealName::canonical(2);
        assert_eq!(
            k2_avoid_self(&SilverPattern::full(), &canonical, &BitString::empty(), &[]),
            Err(NameError::NotDirectlyForcedNeq)
        );
    }

    #[test]
    fn k2_transports_along_the_action() {
        // same data as the worked example, pushed through sigma = 1
        let sigma = bs("1");
        let c = flipped_digit_name(1).shift(&sigma);
        let tree = pat("0").act(&sigma);
        let s = k2_avoid_self(&tree, &c, &sigma, &[]).unwrap();
        assert!(s.is_subset(&tree));
        assert!(df_notin(&s, &c, &s.act(&sigma)).is_some());
    }

    #[test]
    fn ka_distinct_coordinates() {
        let base = MultiSystem::empty()
            .with_coord(0, SplitSystem::seed(SilverPattern::full()).extend())
            .with_coord(1, SplitSystem::seed(SilverPattern::full()).extend());
        let canonical = RealName::canonical(6);
        let out = ka_step(&base, 0, 1, &BitString::empty(), &canonical, &[]).unwrap();
        assert!(out.extends(&base));
        let w = avoidance_witness(&out, 0, 1, &BitString::empty(), &canonical).unwrap();
        assert!(BitString::empty().is_proper_prefix_of(&w.index));
    }

    #[test]
    fn ka_equal_coordinates() {
        let base = MultiSystem::empty().with_coord(0, SplitSystem::seed(pat("0")).extend());
        let c = flipped_digit_name(4);
        let out = ka_step(&base, 0, 0, &bs("0"), &c, &[]).unwrap();
        assert!(out.extends(&base));
        let w = avoidance_witness(&out, 0, 0, &bs("0"), &c).unwrap();
        assert!(bs("0").is_proper_prefix_of(&w.index));
    }

    #[test]
    fn ka_refuses_unavoidable_name() {
        // the canonical name cannot be forced away from a fully free layer
        let base =
            MultiSystem::empty().with_coord(0, SplitSystem::seed(SilverPattern::full()).extend());
        let canonical = RealName::canonical(4);
        assert!(matches!(
            ka_step(&base, 0, 0, &BitString::empty(), &canonical, &[]),
            Err(NameError::DensityFailure(_))
        ));
    }

    #[test]
    fn filter_chain_and_eval() {
        let canonical = RealName::canonical(2);
        let chain = FilterChain::from_entries(vec![pat("1"), pat("10")]).unwrap();
        assert_eq!(eval_name(&chain, &canonical), bs("10"));
        assert_eq!(eval_name(&FilterChain::new(), &canonical), BitString::empty());
    }

    #[test]
    fn filter_chain_rejects_widening() {
        let mut chain = FilterChain::from_entries(vec![pat("10")]).unwrap();
        assert!(matches!(
            chain.push(pat("1")),
            Err(NameError::ChainNotDecreasing { .. })
        ));
    }

    #[test]
    fn descending_chain_agrees_with_forced_prefix() {
        let canonical = RealName::canonical(3);
        let (tree, forced) =
            force_long_prefix(&SilverPattern::full(), &canonical, 2, &[]).unwrap();
        let mut chain = FilterChain::from_entries(vec![tree]).unwrap();
        chain.descend_through(&canonical).unwrap();
        let value = eval_name(&chain, &canonical);
        assert!(forced.is_prefix_of(&value));
    }

    #[test]
    fn name_serialization_round_trip() {
        let c = flipped_digit_name(3);
        let text = c.to_string();
        let back: RealName = text.parse().unwrap();
        assert_eq!(back, c);
    }
}
