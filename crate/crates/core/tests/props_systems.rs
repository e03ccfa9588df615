//! Property tests for the splitting-system calculus and fusion limits.

use proptest::prelude::*;

use silvertree::strings::BitString;
use silvertree::suites::{oracle, Gen};
use silvertree::systems::{
    sys3_check, Ambient, Certificate, FusionChain, MultiSystem, SplitSystem,
};

fn system_from_seed() -> impl Strategy<Value = SplitSystem> {
    any::<u64>().prop_map(|seed| Gen::new(seed).valid_system(4))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operations_preserve_every_clause(sys in system_from_seed(), seed in any::<u64>()) {
        let ambient = Ambient::All;
        prop_assert!(sys.validate(&ambient).all_hold());

        let extended = sys.extend();
        prop_assert!(extended.validate(&ambient).all_hold());
        prop_assert!(extended.properly_extends(&sys));

        let mut gen = Gen::new(seed);
        let layer = BitString::all_of_length(extended.height() - 1);
        let s0 = layer[gen.below(layer.len())].clone();
        let smaller = gen.subtree(extended.tree(&s0), 2);
        let reduced = extended.reduce_at(&s0, &smaller).unwrap();
        prop_assert!(reduced.validate(&ambient).all_hold());
        prop_assert!(reduced.reduces(&extended));
        prop_assert!(sys3_check(&sys, &extended, &reduced));
        prop_assert!(reduced.properly_extends(&sys));
    }

    #[test]
    fn union_top_window_is_the_union_of_layer_windows(sys in system_from_seed()) {
        let depth = sys.top_stem_len();
        let union = sys.union_top();
        let mut expected = std::collections::BTreeSet::new();
        for s in BitString::all_of_length(sys.height() - 1) {
            expected.extend(sys.tree(&s).truncate(depth).nodes().iter().cloned());
        }
        let window = union.truncate(depth);
        prop_assert_eq!(window.nodes(), &expected);
    }

    #[test]
    fn union_top_frees_exactly_the_splits(sys in system_from_seed()) {
        let union = sys.union_top();
        let depths = sys.split_depths();
        let top = *depths.last().unwrap();
        for j in 0..top {
            let free = union.slot(j) == silvertree::trees::Slot::Free;
            prop_assert_eq!(free, depths[..depths.len() - 1].contains(&j));
        }
    }

    #[test]
    fn multisystem_orders(seed in any::<u64>()) {
        let mut gen = Gen::new(seed);
        let psi = MultiSystem::empty()
            .with_coord(0, gen.valid_system(3))
            .with_coord(2, gen.valid_system(2));
        let phi = psi.proper_extension();
        prop_assert!(phi.extends(&psi));
        prop_assert!(phi.properly_extends(&psi));
        prop_assert!(!psi.properly_extends(&psi));
        prop_assert!(psi.reduces(&psi));
    }

    #[test]
    fn fusion_answers_match_the_stage_brute_force(seed in any::<u64>()) {
        let mut gen = Gen::new(seed);
        let mut chain = FusionChain::new(MultiSystem::empty());
        chain.step_seed(0, gen.pattern(1)).unwrap();
        let mut extends = 1usize;
        for _ in 0..6 {
            let height = chain.last().height_at(0);
            if extends < 4 && (height < 2 || gen.flip()) {
                chain.step_extend(0).unwrap();
                extends += 1;
            } else {
                let layer = BitString::all_of_length(height - 1);
                let s0 = layer[gen.below(layer.len())].clone();
                let smaller = gen.subtree(chain.last().get(0).unwrap().tree(&s0), 1);
                chain.step_reduce(0, &s0, &smaller).unwrap();
            }
        }
        let top = chain.last().get(0).unwrap().top_stem_len();
        for t in BitString::all_up_to(top) {
            let answer = chain.fusion_member(0, &BitString::empty(), &t).unwrap();
            prop_assert_eq!(
                answer.member,
                oracle::fusion_member(chain.stages(), 0, &BitString::empty(), &t)
            );
            prop_assert_eq!(answer.certificate, Certificate::Stable);
        }
        // the pattern view agrees with memberwise answers
        let pattern = chain.fusion_pattern(0, &BitString::empty(), top).unwrap();
        for t in BitString::all_up_to(top) {
            let member = chain.fusion_member(0, &BitString::empty(), &t).unwrap().member;
            prop_assert_eq!(member, pattern.contains(&t));
        }
    }

    #[test]
    fn serialization_round_trips(sys in system_from_seed()) {
        let back: SplitSystem = sys.to_string().parse().unwrap();
        prop_assert_eq!(back, sys.clone());
        let multi = MultiSystem::empty().with_coord(1, sys);
        let back: MultiSystem = multi.to_string().parse().unwrap();
        prop_assert_eq!(back, multi);
    }
}
