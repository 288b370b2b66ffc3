mod common;

use std::collections::BTreeSet;

use common::{matrix_reach, random_dag, random_subset, rng};
use lkw_core::dag::Dag;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

type Set = BTreeSet<usize>;

fn instance(seed: u64) -> (Dag, Set, Set, Set, ChaCha8Rng) {
    let mut g = rng(seed);
    let d = random_dag(&mut g, 10);
    let n = d.len();
    let x = random_subset(&mut g, n, 0.2);
    let y = random_subset(&mut g, n, 0.2);
    let z = random_subset(&mut g, n, 0.25);
    (d, x, y, z, g)
}

fn sep(d: &Dag, x: &Set, y: &Set, z: &Set) -> bool {
    d.d_separated(x, y, z).unwrap()
}

fn minus(a: &Set, b: &Set) -> Set {
    a.difference(b).copied().collect()
}

fn union(a: &Set, b: &Set) -> Set {
    a.union(b).copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn fast_decision_matches_trail_enumeration(seed in any::<u64>()) {
        let (d, x, y, z, _) = instance(seed);
        prop_assert_eq!(sep(&d, &x, &y, &z), d.d_separated_by_trails(&x, &y, &z).unwrap());
    }

    #[test]
    fn shared_vertices_reduce_to_the_remainders(seed in any::<u64>()) {
        let (d, x, y, z, _) = instance(seed);
        let rhs = x.intersection(&y).all(|v| z.contains(v)) && sep(&d, &minus(&x, &z), &minus(&y, &z), &z);
        prop_assert_eq!(sep(&d, &x, &y, &z), rhs);
    }

    #[test]
    fn symmetry(seed in any::<u64>()) {
        let (d, x, y, z, _) = instance(seed);
        prop_assert_eq!(sep(&d, &x, &y, &z), sep(&d, &y, &x, &z));
    }

    #[test]
    fn monotonicity_and_base_monotonicity(seed in any::<u64>()) {
        let (d, x, y, z, mut g) = instance(seed);
        let y0: Set = y.iter().copied().filter(|_| g.gen_bool(0.5)).collect();
        if sep(&d, &x, &y, &z) {
            prop_assert!(sep(&d, &x, &y0, &z));
            prop_assert!(sep(&d, &x, &minus(&y, &y0), &union(&z, &y0)));
        }
    }

    #[test]
    fn contraction(seed in any::<u64>()) {
        let (d, x, y1, z, mut g) = instance(seed);
        let y2 = random_subset(&mut g, d.len(), 0.2);
        if sep(&d, &x, &y1, &z) && sep(&d, &x, &y2, &union(&z, &y1)) {
            prop_assert!(sep(&d, &x, &union(&y1, &y2), &z));
        }
    }

    #[test]
    fn descendants_are_matrix_reachability(seed in any::<u64>()) {
        let (d, x, _, _, _) = instance(seed);
        let reach = matrix_reach(&d);
        let want: Set = (0..d.len()).filter(|&v| x.iter().any(|&s| reach[s][v])).collect();
        prop_assert_eq!(d.descendants(&x).unwrap(), want);
        prop_assert!(d.topological_order().is_ok());
        prop_assert_eq!(Dag::parse(&d.to_string()).unwrap(), d);
    }
}
