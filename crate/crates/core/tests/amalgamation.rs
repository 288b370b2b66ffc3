mod common;

use lkw_core::tableau::{amalgamate, check_axioms, is_partial_tableau_iso, realize, AmalgamResult};
use lkw_core::{is_partial_iso, PartialMap};

#[test]
fn generated_triples_amalgamate() {
    let (triples, dropped) = common::amalgam_triples(11, 3);
    assert!(triples.len() >= 20, "only {} usable triples ({dropped} dropped)", triples.len());
    let mut failures = Vec::new();
    for t in &triples {
        let r = match amalgamate(&t.a, &t.m0, &t.m1, &t.i0, &t.i1, &t.th) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("{}: {e}", t.label));
                continue;
            }
        };
        let rep = check_axioms(&r.c, &t.th);
        if !rep.universal_ok() {
            failures.push(format!("{}: {:?}", t.label, rep.failing()));
            continue;
        }
        assert!(is_partial_tableau_iso(&t.m0, &r.c, &r.g0).unwrap(), "{}", t.label);
        assert!(is_partial_tableau_iso(&t.m1, &r.c, &r.g1).unwrap(), "{}", t.label);
        let (m0s, m1s, cs) = (realize(&t.m0, &t.th).unwrap(), realize(&t.m1, &t.th).unwrap(), realize(&r.c, &t.th).unwrap());
        assert!(is_partial_iso(&m0s, &cs, &r.g0).unwrap());
        assert!(is_partial_iso(&m1s, &cs, &r.g1).unwrap());
        for (ai, (&x0, &x1)) in t.i0.iter().zip(&t.i1).enumerate() {
            assert_eq!(r.g0.get(x0), r.g1.get(x1), "{}: A element {ai}", t.label);
        }
        common::merges_stay_injective(&r, t.m0.size()).unwrap();
        let _ = (AmalgamResult::step_bound(&t.th), PartialMap::identity(0..0));
    }
    assert!(failures.is_empty(), "{} failures of {}:\n{}", failures.len(), triples.len(), failures.join("\n"));
}
