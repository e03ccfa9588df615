//! Property tests for the xor action and the eventual-equality predicate.

use proptest::prelude::*;

use silvertree::points::{e0_related, orbit_prefixes, xor_point, LazyPoint, TailRule};
use silvertree::strings::{xor_pad, xor_strings, BitString};
use silvertree::trees::{SilverPattern, Slot};

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

fn total_point() -> impl Strategy<Value = LazyPoint> {
    (bits(5), tail_rule()).prop_map(|(prefix, tail)| LazyPoint::new(prefix, tail))
}

fn tail_rule() -> impl Strategy<Value = TailRule> {
    prop_oneof![
        Just(TailRule::AllZero),
        Just(TailRule::AllOne),
        pattern(4).prop_map(TailRule::FollowStem),
    ]
}

proptest! {
    #[test]
    fn xor_is_self_inverse(s in bits(6), t in bits(8)) {
        prop_assert_eq!(xor_strings(&s, &xor_strings(&s, &t)), t);
    }

    #[test]
    fn xor_preserves_length(s in bits(6), t in bits(8)) {
        prop_assert_eq!(xor_strings(&s, &t).len(), t.len());
    }

    #[test]
    fn equal_length_actions_compose(
        pair in (0usize..6).prop_flat_map(|n| {
            (
                prop::collection::vec(any::<bool>(), n),
                prop::collection::vec(any::<bool>(), n),
            )
        }),
        t in bits(8),
    ) {
        let s = BitString::from_bits(pair.0);
        let u = BitString::from_bits(pair.1);
        prop_assert_eq!(
            xor_strings(&s, &xor_strings(&u, &t)),
            xor_strings(&xor_pad(&s, &u), &t)
        );
    }

    #[test]
    fn point_action_is_involution(s in bits(5), x in total_point()) {
        prop_assert_eq!(xor_point(&s, &xor_point(&s, &x)), x);
    }

    #[test]
    fn eventual_equality_is_an_equivalence(
        x in total_point(),
        y in total_point(),
        z in total_point(),
    ) {
        prop_assert_eq!(e0_related(&x, &x), Ok(true));
        prop_assert_eq!(e0_related(&x, &y), e0_related(&y, &x));
        if e0_related(&x, &y) == Ok(true) && e0_related(&y, &z) == Ok(true) {
            prop_assert_eq!(e0_related(&x, &z), Ok(true));
        }
    }

    #[test]
    fn finite_perturbation_stays_related(x in total_point(), s in bits(6)) {
        prop_assert_eq!(e0_related(&x, &xor_point(&s, &x)), Ok(true));
    }

    #[test]
    fn orbit_prefixes_fill_the_level(x in total_point(), n in 0usize..5) {
        let orbit = orbit_prefixes(&x, n);
        prop_assert_eq!(orbit.len(), 1 << n);
    }

    #[test]
    fn orbit_prefixes_are_orbit_invariant(
        x in total_point(),
        n in 0usize..4,
        sigma in bits(4),
    ) {
        prop_assume!(sigma.len() <= n);
        let moved = xor_point(&sigma, &x);
        prop_assert_eq!(orbit_prefixes(&x, n), orbit_prefixes(&moved, n));
    }
}
