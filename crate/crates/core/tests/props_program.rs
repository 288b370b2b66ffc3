mod common;

use std::collections::BTreeSet;

use common::{cone, rng, toy_run};
use lkw_core::program::{hdesc, locally_separated, requests_attention};
use lkw_core::FiniteStructure;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

type Set = BTreeSet<usize>;

fn start_set(g: &mut ChaCha8Rng, n: usize) -> Set {
    let mut s: Set = (0..n).filter(|_| g.gen_bool(0.3)).collect();
    s.insert(g.gen_range(0..n));
    s
}

fn subset(g: &mut ChaCha8Rng, of: &Set, p: f64) -> Set {
    of.iter().copied().filter(|_| g.gen_bool(p)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn runs_grow_and_stop_exactly_when_complete(seed in any::<u64>()) {
        let mut g = rng(seed);
        let n = g.gen_range(2..=9);
        let run = toy_run(FiniteStructure::directed_cycle(n).unwrap(), &start_set(&mut g, n));
        let t = &run.trace;
        prop_assert_eq!(&t.sets[0], &run.closure.close(&t.start).unwrap());
        prop_assert!(t.sets.windows(2).all(|w| w[0].is_subset(&w[1]) && w[0] != w[1]));
        for (i, step) in t.steps.iter().enumerate() {
            prop_assert!(!step.requests.is_empty());
            let mut grown = t.sets[i].clone();
            for r in &step.responses {
                grown.extend(r.representative.iter().copied());
            }
            prop_assert_eq!(&run.closure.close(&grown).unwrap(), &t.sets[i + 1]);
        }
        let (last, _) = run.world.induced_substructure(t.final_set()).unwrap();
        let complete = requests_attention(&last, &run.spec).unwrap().is_empty();
        prop_assert_eq!(complete, t.stabilized.is_some());
        prop_assert_eq!(t.stabilized, Some(t.sets.len() - 1));
    }

    #[test]
    fn construction_graphs_are_layered_and_labelled(seed in any::<u64>()) {
        let mut g = rng(seed);
        let n = g.gen_range(2..=8);
        let run = toy_run(FiniteStructure::directed_cycle(n).unwrap(), &start_set(&mut g, n));
        let cg = &run.cg;
        prop_assert!(cg.dag().topological_order().is_ok());
        for (a, b) in cg.dag().edges() {
            prop_assert_eq!(cg.vertex(a).0 + 1, cg.vertex(b).0);
        }
        for v in 0..cg.dag().len() {
            let (j, _) = cg.vertex(v);
            if j > 0 {
                let names: Vec<&str> = cg.dag().parents(v).iter().map(|&u| cg.dag().name(u)).collect();
                prop_assert_eq!(cg.label(v), format!("({j}; {})", names.join(" ")));
            }
        }
        let a0 = subset(&mut g, cg.base(), 0.5);
        let start = cg.base_vertices(&a0).unwrap();
        prop_assert_eq!(hdesc(cg, &a0).unwrap(), cone(cg.dag().len(), &cg.dag().edges(), &start));
    }

    #[test]
    fn local_separation_is_monotone(seed in any::<u64>()) {
        let mut g = rng(seed);
        let n = g.gen_range(3..=8);
        let run = toy_run(FiniteStructure::directed_cycle(n).unwrap(), &start_set(&mut g, n));
        let cg = &run.cg;
        let d = cg.base().clone();
        for _ in 0..6 {
            let (a, b, c) = (subset(&mut g, &d, 0.3), subset(&mut g, &d, 0.4), subset(&mut g, &d, 0.3));
            let b0 = subset(&mut g, &b, 0.5);
            if locally_separated(cg, &a, &b, &c, 12).unwrap() {
                prop_assert!(locally_separated(cg, &a, &b0, &c, 12).unwrap());
                let cb0: Set = c.union(&b0).copied().collect();
                prop_assert!(locally_separated(cg, &a, &b, &cb0, 12).unwrap());
            }
            // a shared point outside C is a common closure point
            if a.intersection(&b).any(|e| !c.contains(e)) {
                prop_assert!(!locally_separated(cg, &a, &b, &c, 12).unwrap());
            }
        }
    }
}
