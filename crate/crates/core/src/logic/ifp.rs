use std::collections::{BTreeMap, BTreeSet};

use super::{Formula, Query, RelationTable};
use crate::closure::{ClosureConfig, ClosureOperator};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::structure::{all_tuples, FiniteStructure};

/// A formula `ψ(x0, ..., x_{r-1}; X)` over the structure's signature plus
/// one auxiliary r-ary symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedFormula {
    body: Formula,
    r: usize,
    aux: String,
    free: Vec<String>,
}

impl ExpandedFormula {
    pub fn new(body: Formula, r: usize) -> Result<Self> {
        Self::with_aux(body, r, "X")
    }

    pub fn with_aux(body: Formula, r: usize, aux: &str) -> Result<Self> {
        Self::with_vars(body, r, aux, "x")
    }

    /// Free variables are `<prefix>0 .. <prefix>{r-1}`.
    pub fn with_vars(body: Formula, r: usize, aux: &str, prefix: &str) -> Result<Self> {
        if r == 0 {
            return Err(Error::Formula("auxiliary arity must be positive".into()));
        }
        let free: Vec<String> = (0..r).map(|i| format!("{prefix}{i}")).collect();
        if let Some(v) = body.free_variables().iter().find(|v| !free.contains(v)) {
            return Err(Error::UnboundVariable(v.clone()));
        }
        if let Some(&a) = body.relations()?.get(aux) {
            if a != r {
                return Err(Error::ArityMismatch {
                    rel: aux.to_string(),
                    expected: r,
                    got: a,
                });
            }
        }
        Ok(ExpandedFormula {
            body,
            r,
            aux: aux.to_string(),
            free,
        })
    }

    pub fn parse(text: &str, r: usize) -> Result<Self> {
        Self::new(Formula::parse(text)?, r)
    }

    pub fn body(&self) -> &Formula {
        &self.body
    }

    pub fn arity(&self) -> usize {
        self.r
    }

    pub fn aux(&self) -> &str {
        &self.aux
    }

    pub fn free_vars(&self) -> &[String] {
        &self.free
    }

    /// Body is a prenex block of existential quantifiers.
    pub fn is_proper_exists(&self) -> bool {
        self.body.is_prenex_existential()
    }

    /// Compiles against `m`'s signature; the auxiliary table is passed
    /// first, then `extras` in order.
    pub fn compile(&self, m: &FiniteStructure, extras: &[(&str, usize)]) -> Result<Query> {
        let mut decl = vec![(self.aux.as_str(), self.r)];
        decl.extend_from_slice(extras);
        Query::compile(&self.body, m.signature(), &decl, &self.free)
    }
}

impl std::fmt::Display for ExpandedFormula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.body.fmt(f)
    }
}

/// `ψ^0 ⊆ ψ^1 ⊆ ... ⊆ ψ^{e} = ψ^{e+1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSequence {
    stages: Vec<BTreeSet<Vec<usize>>>,
    index: usize,
}

impl StageSequence {
    pub fn stages(&self) -> &[BTreeSet<Vec<usize>>] {
        &self.stages
    }

    pub fn stage(&self, t: usize) -> &BTreeSet<Vec<usize>> {
        &self.stages[t.min(self.stages.len() - 1)]
    }

    /// Least `e` with `ψ^e = ψ^{e+1}`.
    pub fn stabilization_index(&self) -> usize {
        self.index
    }

    pub fn fixed_point(&self) -> &BTreeSet<Vec<usize>> {
        &self.stages[self.index]
    }

    /// Stage at which a tuple first appears.
    pub fn entry_stage(&self, tuple: &[usize]) -> Option<usize> {
        self.stages.iter().position(|s| s.contains(tuple))
    }
}

pub fn ifp_stages(a: &FiniteStructure, psi: &ExpandedFormula) -> Result<StageSequence> {
    ifp_stages_with(a, psi, &[], Exec::default())
}

/// Inflationary stages with extra relation symbols fixed by `extras`.
pub fn ifp_stages_with(
    a: &FiniteStructure,
    psi: &ExpandedFormula,
    extras: &[(&str, &RelationTable)],
    exec: Exec,
) -> Result<StageSequence> {
    let decl: Vec<(&str, usize)> = extras.iter().map(|(n, t)| (*n, t.arity())).collect();
    let q = psi.compile(a, &decl)?;
    let r = psi.arity();
    let n = a.size();
    let space = all_tuples(n, r);
    let bound = n.pow(r as u32);
    let mut table = RelationTable::new(r, n);
    let mut stages = vec![BTreeSet::new()];
    loop {
        let mut tables: Vec<&RelationTable> = vec![&table];
        tables.extend(extras.iter().map(|e| e.1));
        let fresh: Vec<bool> = exec.map_slice(&space, |t| !table.contains(t) && q.eval(a, &tables, t));
        let added: Vec<&Vec<usize>> = space.iter().zip(&fresh).filter(|(_, &f)| f).map(|(t, _)| t).collect();
        let mut next = stages.last().expect("nonempty").clone();
        if added.is_empty() {
            stages.push(next);
            break;
        }
        for t in added {
            next.insert(t.clone());
            table.insert(t);
        }
        stages.push(next);
    }
    let index = stages.len() - 2;
    debug_assert!(index <= bound);
    Ok(StageSequence { stages, index })
}

/// All `(b̄, ā)` with `b̄ ⊩^φ ā ∈ R'` with respect to `(A, R)`, closure taken
/// by `cfg` inside `a`.
pub fn forcing_triples(
    a: &FiniteStructure,
    r: &BTreeSet<Vec<usize>>,
    phi: &ExpandedFormula,
    cfg: ClosureConfig,
) -> Result<BTreeSet<(Vec<usize>, Vec<usize>)>> {
    let op = ClosureOperator::new(a, cfg)?;
    forcing_with(a, r, phi, &[], &|s| op.close(s))
}

/// Forcing pairs with a caller-supplied closure. Pairs are `(b̄, ā)`:
/// `ā ∈ R'∖R`, `b̄ ∈ R`, and `φ(ā)` fails once `cl(b̄)^r` is deleted from `R`.
pub fn forcing_with(
    a: &FiniteStructure,
    r: &BTreeSet<Vec<usize>>,
    phi: &ExpandedFormula,
    extras: &[(&str, &RelationTable)],
    close: &dyn Fn(&BTreeSet<usize>) -> Result<BTreeSet<usize>>,
) -> Result<BTreeSet<(Vec<usize>, Vec<usize>)>> {
    let arity = phi.arity();
    let n = a.size();
    for t in r {
        if t.len() != arity {
            return Err(Error::ArityMismatch {
                rel: phi.aux().to_string(),
                expected: arity,
                got: t.len(),
            });
        }
        if let Some(&elem) = t.iter().find(|&&e| e >= n) {
            return Err(Error::OutOfRange { elem, size: n });
        }
    }
    let mut out = BTreeSet::new();
    if r.is_empty() {
        return Ok(out);
    }
    let decl: Vec<(&str, usize)> = extras.iter().map(|(n, t)| (*n, t.arity())).collect();
    let q = phi.compile(a, &decl)?;
    let table = RelationTable::from_tuples(arity, n, r);
    let tables = with_extras(&table, extras);
    let fresh: Vec<Vec<usize>> = all_tuples(n, arity)
        .into_iter()
        .filter(|t| !table.contains(t) && q.eval(a, &tables, t))
        .collect();
    if fresh.is_empty() {
        return Ok(out);
    }
    let mut groups: BTreeMap<BTreeSet<usize>, Vec<&Vec<usize>>> = BTreeMap::new();
    for b in r {
        let range: BTreeSet<usize> = b.iter().copied().collect();
        groups.entry(close(&range)?).or_default().push(b);
    }
    for (cl, members) in groups {
        let mut reduced = table.clone();
        for t in r {
            if t.iter().all(|e| cl.contains(e)) {
                reduced.remove(t);
            }
        }
        let tables = with_extras(&reduced, extras);
        for target in &fresh {
            if !q.eval(a, &tables, target) {
                for b in &members {
                    out.insert(((*b).clone(), target.clone()));
                }
            }
        }
    }
    Ok(out)
}

fn with_extras<'a>(aux: &'a RelationTable, extras: &[(&str, &'a RelationTable)]) -> Vec<&'a RelationTable> {
    let mut v = vec![aux];
    v.extend(extras.iter().map(|e| e.1));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tc() -> ExpandedFormula {
        ExpandedFormula::parse("(or (E x0 x1) (exists z (and (X x0 z) (E z x1))))", 2).unwrap()
    }

    #[test]
    fn aux_only_body_never_fires() {
        let p = FiniteStructure::digraph(3, &[(0, 1), (1, 2)]).unwrap();
        let s = ifp_stages(&p, &ExpandedFormula::parse("(X x0 x1)", 2).unwrap()).unwrap();
        assert_eq!(s.stabilization_index(), 0);
        assert!(s.fixed_point().is_empty());
        assert_eq!(s.stages().len(), 2);
    }

    #[test]
    fn all_true_body_fills_in_one_stage() {
        let p = FiniteStructure::digraph(3, &[]).unwrap();
        let s = ifp_stages(&p, &ExpandedFormula::parse("(= x0 x0)", 1).unwrap()).unwrap();
        assert_eq!(s.stabilization_index(), 1);
        assert_eq!(s.fixed_point().len(), 3);
    }

    #[test]
    fn transitive_closure_on_a_path() {
        let p = FiniteStructure::digraph(3, &[(0, 1), (1, 2)]).unwrap();
        let s = ifp_stages(&p, &tc()).unwrap();
        assert_eq!(s.stage(1), &BTreeSet::from([vec![0, 1], vec![1, 2]]));
        assert_eq!(s.stage(2), &BTreeSet::from([vec![0, 1], vec![1, 2], vec![0, 2]]));
        assert_eq!(s.stabilization_index(), 2);
        assert_eq!(s.entry_stage(&[0, 2]), Some(2));
    }

    #[test]
    fn forcing_on_a_path() {
        let p = FiniteStructure::digraph(3, &[(0, 1), (1, 2)]).unwrap();
        let r1 = BTreeSet::from([vec![0, 1], vec![1, 2]]);
        let pairs = forcing_triples(&p, &r1, &tc(), ClosureConfig::trivial()).unwrap();
        // (0,2) is derived from X(0,1) and E(1,2); only removing (0,1) kills it
        assert_eq!(pairs, BTreeSet::from([(vec![0, 1], vec![0, 2])]));
        assert!(forcing_triples(&p, &BTreeSet::new(), &tc(), ClosureConfig::trivial())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn free_variables_are_checked() {
        assert!(matches!(
            ExpandedFormula::parse("(E x0 y)", 2),
            Err(Error::UnboundVariable(_))
        ));
        assert!(matches!(
            ExpandedFormula::parse("(X x0)", 2),
            Err(Error::ArityMismatch { .. })
        ));
    }
}
