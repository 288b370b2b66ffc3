mod common;

use common::rng;
use lkw_core::corpus::random_digraph;
use lkw_core::tableau::{check_axioms, is_partial_tableau_iso, realize, to_tableau, Tableau, TableauTheory};
use lkw_core::PartialMap;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tableau_of_a_model_round_trips(seed in any::<u64>(), k in 2usize..=3) {
        let mut g = rng(seed);
        let n = g.gen_range(1..=5);
        let m = random_digraph(n, g.gen_range(0.1..0.7), &mut g).unwrap();
        let th = TableauTheory::of_structure(&m, k).unwrap();
        let t = to_tableau(&m, &th).unwrap();
        prop_assert!(check_axioms(&t, &th).all_ok());
        let back = realize(&t, &th).unwrap();
        prop_assert_eq!(back.to_string(), m.to_string());
        prop_assert_eq!(to_tableau(&back, &th).unwrap(), t.clone());
        prop_assert_eq!(Tableau::parse(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn relabeled_copy_is_an_isomorphic_tableau(seed in any::<u64>()) {
        let mut g = rng(seed);
        let n = g.gen_range(1..=5);
        let m = random_digraph(n, g.gen_range(0.1..0.7), &mut g).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut g);
        let th = TableauTheory::of_structure(&m, 2).unwrap();
        let (a, b) = (to_tableau(&m, &th).unwrap(), to_tableau(&m.relabel(&perm).unwrap(), &th).unwrap());
        let f = PartialMap::new(perm.iter().copied().enumerate()).unwrap();
        prop_assert!(is_partial_tableau_iso(&a, &b, &f).unwrap());
        prop_assert!(is_partial_tableau_iso(&b, &a, &f.inverse()).unwrap());
    }
}
