//! Property tests for the pattern-tree algebra, checked against enumerated
//! node sets where a finite oracle exists.

use std::collections::BTreeSet;

use proptest::prelude::*;

use silvertree::strings::{xor_strings, BitString};
use silvertree::trees::{validate_silver_truncated, SilverPattern, Slot};

fn bits(max: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), 0..=max).prop_map(BitString::from_bits)
}

fn slot() -> impl Strategy<Value = Slot> {
    prop_oneof![
        Just(Slot::Fixed(false)),
        Just(Slot::Fixed(true)),
        Just(Slot::Free)
    ]
}

fn pattern(max: usize) -> impl Strategy<Value = SilverPattern> {
    prop::collection::vec(slot(), 0..=max).prop_map(SilverPattern::new)
}

/// Oracle membership, written out from raw slots.
fn matches(p: &SilverPattern, t: &BitString) -> bool {
    (0..t.len()).all(|k| match p.slot(k) {
        Slot::Fixed(d) => t.bit(k) == d,
        Slot::Free => true,
    })
}

fn nodes(p: &SilverPattern, depth: usize) -> BTreeSet<BitString> {
    BitString::all_up_to(depth)
        .into_iter()
        .filter(|t| matches(p, t))
        .collect()
}

proptest! {
    #[test]
    fn restriction_membership(t in pattern(5), u in bits(4), probe in bits(6)) {
        prop_assume!(t.contains(&u));
        let restricted = t.restrict(&u).unwrap();
        prop_assert_eq!(
            restricted.contains(&probe),
            t.contains(&probe) && probe.comparable(&u)
        );
    }

    #[test]
    fn action_is_involution_and_maps_nodes(t in pattern(5), s in bits(5)) {
        let acted = t.act(&s);
        prop_assert_eq!(acted.act(&s), t.clone());
        let depth = 6;
        let mapped: BTreeSet<BitString> =
            nodes(&t, depth).iter().map(|n| xor_strings(&s, n)).collect();
        prop_assert_eq!(nodes(&acted, depth), mapped);
    }

    #[test]
    fn intersection_is_the_greatest_lower_bound(t in pattern(5), s in pattern(5), r0 in pattern(6)) {
        match t.intersect(&s) {
            Some(meet) => {
                prop_assert!(meet.is_subset(&t) && meet.is_subset(&s));
                // anything below both is below the meet
                if let Some(r) = r0.intersect(&meet) {
                    prop_assert!(r.is_subset(&t) && r.is_subset(&s) && r.is_subset(&meet));
                }
                if r0.is_subset(&t) && r0.is_subset(&s) {
                    prop_assert!(r0.is_subset(&meet));
                }
            }
            None => {
                // no common branches at the decisive depth
                let depth = t.len().max(s.len());
                let both = BitString::all_of_length(depth)
                    .into_iter()
                    .filter(|n| matches(&t, n) && matches(&s, n))
                    .count();
                prop_assert_eq!(both, 0);
            }
        }
    }

    #[test]
    fn stems_split_into_the_tree(t in pattern(6)) {
        let stem = t.stem();
        prop_assert!(t.contains(&stem.child(false)));
        prop_assert!(t.contains(&stem.child(true)));
        // nothing below the stem branches
        for k in 0..stem.len() {
            prop_assert_eq!(t.slot(k), Slot::Fixed(stem.bit(k)));
        }
    }

    #[test]
    fn union_coverage_matches_deep_oracle(
        t in pattern(5),
        parts in prop::collection::vec(pattern(5), 0..4),
    ) {
        let decisive = parts
            .iter()
            .map(SilverPattern::len)
            .chain(std::iter::once(t.len()))
            .max()
            .unwrap()
            + 2;
        let brute = t
            .nodes_at(decisive)
            .iter()
            .all(|n| parts.iter().any(|p| matches(p, n)));
        prop_assert_eq!(t.subset_of_union(&parts), brute);
    }

    #[test]
    fn sibling_unions_free_the_varying_positions(
        base in pattern(5),
        picks in prop::collection::vec(any::<bool>(), 6),
    ) {
        // free up to two fixed positions of the base shape
        let fixed: Vec<usize> = (0..base.len())
            .filter(|&k| matches!(base.slot(k), Slot::Fixed(_)))
            .collect();
        let varying: Vec<usize> = fixed
            .iter()
            .zip(&picks)
            .filter(|(_, &keep)| keep)
            .map(|(&k, _)| k)
            .take(2)
            .collect();
        prop_assume!(!varying.is_empty());

        let mut parts = vec![base.clone()];
        for &k in &varying {
            let mut next = Vec::new();
            for p in &parts {
                for digit in [false, true] {
                    let slots: Vec<Slot> = (0..p.len())
                        .map(|j| if j == k { Slot::Fixed(digit) } else { p.slot(j) })
                        .collect();
                    next.push(SilverPattern::new(slots));
                }
            }
            parts = next;
        }
        let union = SilverPattern::union_siblings(&parts).unwrap();

        // the union equals the base with the varying positions freed
        let expect: Vec<Slot> = (0..base.len())
            .map(|j| if varying.contains(&j) { Slot::Free } else { base.slot(j) })
            .collect();
        prop_assert_eq!(union.clone(), SilverPattern::new(expect));

        // and its node set is the union of the parts' node sets
        let depth = base.len() + 2;
        let mut expected_nodes = BTreeSet::new();
        for p in &parts {
            expected_nodes.extend(nodes(p, depth));
        }
        prop_assert_eq!(nodes(&union, depth), expected_nodes);
    }

    #[test]
    fn truncations_are_silver_windows(t in pattern(6), d in 0usize..6) {
        prop_assert!(validate_silver_truncated(&t.truncate(d)));
    }
}
