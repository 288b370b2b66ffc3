//! Empirical checks of properties a program is supposed to have. None of
//! them is assumed elsewhere.

use std::collections::BTreeSet;

use super::{eval_star, requests_attention, restrict, CommandOperator, ProgramSpec};
use crate::closure::ClosureOperator;
use crate::error::{Error, Result};
use crate::invariant::{build_invariant, invariants_equal};
use crate::structure::{all_tuples, FiniteStructure, PartialMap};

const SUBSET_CAP: usize = 20;

/// A closed subset on which completeness and being a model disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenuinenessMismatch {
    pub set: BTreeSet<usize>,
    pub complete: bool,
    pub model: bool,
}

/// Compares completeness with k-equivalence to `reference` on every
/// nonempty closed subset of the world of size at most `max_size`.
pub fn audit_genuineness(
    spec: &ProgramSpec,
    world: &FiniteStructure,
    reference: &FiniteStructure,
    k: usize,
    closure: &ClosureOperator,
    max_size: usize,
) -> Result<Vec<GenuinenessMismatch>> {
    let n = world.size();
    if n > SUBSET_CAP {
        return Err(Error::SubsetLimit { size: n, limit: SUBSET_CAP });
    }
    let target = build_invariant(reference, k)?;
    let mut out = Vec::new();
    for mask in 1u32..1 << n {
        if mask.count_ones() as usize > max_size {
            continue;
        }
        let set: BTreeSet<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if closure.close(&set)? != set {
            continue;
        }
        let (sub, _) = restrict(world, &set)?;
        let complete = requests_attention(&sub, spec)?.is_empty();
        let model = invariants_equal(&build_invariant(&sub, k)?, &target)?;
        if complete != model {
            out.push(GenuinenessMismatch { set, complete, model });
        }
    }
    Ok(out)
}

/// Backtracking search for an injective map on `dom` extending `fixed`,
/// preserving every relation in both directions, with each image allowed.
fn find_map(
    m: &FiniteStructure,
    n: &FiniteStructure,
    dom: &[usize],
    fixed: &[(usize, usize)],
    allowed: &dyn Fn(usize, usize) -> bool,
) -> bool {
    fn consistent(m: &FiniteStructure, n: &FiniteStructure, pairs: &[(usize, usize)]) -> bool {
        let last = pairs.len() - 1;
        for rel in 0..m.signature().len() {
            let arity = m.signature().arity(rel);
            for idx in all_tuples(pairs.len(), arity) {
                if !idx.contains(&last) {
                    continue;
                }
                let a: Vec<usize> = idx.iter().map(|&i| pairs[i].0).collect();
                let b: Vec<usize> = idx.iter().map(|&i| pairs[i].1).collect();
                if m.holds(rel, &a) != n.holds(rel, &b) {
                    return false;
                }
            }
        }
        true
    }
    fn go(
        m: &FiniteStructure,
        n: &FiniteStructure,
        rest: &[usize],
        pairs: &mut Vec<(usize, usize)>,
        allowed: &dyn Fn(usize, usize) -> bool,
    ) -> bool {
        let Some((&x, tail)) = rest.split_first() else {
            return true;
        };
        for y in 0..n.size() {
            if pairs.iter().any(|p| p.1 == y) || !allowed(x, y) {
                continue;
            }
            pairs.push((x, y));
            if consistent(m, n, pairs) && go(m, n, tail, pairs, allowed) {
                return true;
            }
            pairs.pop();
        }
        false
    }
    let mut pairs = Vec::new();
    for &p in fixed {
        pairs.push(p);
        if !consistent(m, n, &pairs) {
            return false;
        }
    }
    let rest: Vec<usize> = dom.iter().copied().filter(|x| fixed.iter().all(|p| p.0 != *x)).collect();
    go(m, n, &rest, &mut pairs, allowed)
}

/// Runs from `a` and from `b = f[a]` and looks for an isomorphism between
/// the final sets extending `f`.
pub fn audit_weak_invariance(
    spec: &ProgramSpec,
    op: &CommandOperator,
    world: &FiniteStructure,
    closure: &ClosureOperator,
    a: &BTreeSet<usize>,
    f: &PartialMap,
    max_steps: usize,
) -> Result<bool> {
    let dom: BTreeSet<usize> = f.domain().into_iter().collect();
    if &dom != a {
        return Err(Error::Program("the map must be defined exactly on the start set".into()));
    }
    let b: BTreeSet<usize> = f.pairs().iter().map(|p| p.1).collect();
    let ra = eval_star(a, spec, op, world, "audit", closure, max_steps)?;
    let rb = eval_star(&b, spec, op, world, "audit", closure, max_steps)?;
    let (fa, fb) = (ra.final_set(), rb.final_set());
    if fa.len() != fb.len() {
        return Ok(false);
    }
    let dom: Vec<usize> = fa.iter().copied().collect();
    Ok(find_map(world, world, &dom, f.pairs(), &|x, y| fa.contains(&x) && fb.contains(&y)))
}

/// For `a ⊆ b`: is there an automorphism of the world fixing `a` that
/// moves the final set of `a`'s run into the final set of `b`'s run?
pub fn audit_condition3(
    spec: &ProgramSpec,
    op: &CommandOperator,
    world: &FiniteStructure,
    closure: &ClosureOperator,
    a: &BTreeSet<usize>,
    b: &BTreeSet<usize>,
    max_steps: usize,
) -> Result<bool> {
    if !a.is_subset(b) {
        return Err(Error::Program("condition 3 needs A ⊆ B".into()));
    }
    let fa = eval_star(a, spec, op, world, "audit", closure, max_steps)?.final_set().clone();
    let fb = eval_star(b, spec, op, world, "audit", closure, max_steps)?.final_set().clone();
    let fixed: Vec<(usize, usize)> = a.iter().map(|&x| (x, x)).collect();
    let dom: Vec<usize> = world.universe().collect();
    Ok(find_map(world, world, &dom, &fixed, &|x, y| !fa.contains(&x) || fb.contains(&y)))
}
