use std::collections::{BTreeSet, HashMap};

use super::{hdesc, ConstructionGraph};
use crate::error::{Error, Result};
use crate::pebble::{qf_token, refine_k_types};
use crate::structure::{all_tuples, FiniteStructure, Signature};

pub const DEFAULT_SUBSET_LIMIT: usize = 12;

/// `A ↓_C B` inside the construction graph: for every `C'` with
/// `C ⊆ C' ⊆ cl(BC)`, the first-layer tuples over `A` and over `B` are
/// d-separated by `hdesc(cl(C'))`.
pub fn locally_separated(
    cg: &ConstructionGraph,
    a: &BTreeSet<usize>,
    b: &BTreeSet<usize>,
    c: &BTreeSet<usize>,
    limit: usize,
) -> Result<bool> {
    let base = cg.base();
    for (name, s) in [("A", a), ("B", b), ("C", c)] {
        if !s.is_subset(base) {
            return Err(Error::Program(format!("{name} is not contained in the base set")));
        }
    }
    let cl = cg.closure();
    if &cl.close(base)? != base {
        return Err(Error::Program("base set is not closed".into()));
    }
    let bc: BTreeSet<usize> = b.union(c).copied().collect();
    let free: Vec<usize> = cl.close(&bc)?.difference(c).copied().collect();
    if free.len() > limit {
        return Err(Error::SubsetLimit { size: free.len(), limit });
    }
    let x = cg.base_vertices(a)?;
    let y = cg.base_vertices(b)?;
    let mut seen: HashMap<BTreeSet<usize>, bool> = HashMap::new();
    for mask in 0u64..1 << free.len() {
        let mut cp = c.clone();
        cp.extend(free.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e));
        let closed = cl.close(&cp)?;
        let ok = match seen.get(&closed) {
            Some(&ok) => ok,
            None => {
                let z = hdesc(cg, &closed)?;
                let ok = cg.dag().d_separated(&x, &y, &z)?;
                seen.insert(closed, ok);
                ok
            }
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strength {
    /// Quantifier-free type over the parameters.
    Qf,
    /// Quantifier-free type plus the k-variable color in the world with
    /// the parameters named.
    Colour(usize),
}

/// A partial type over parameters, given as the type of a witness tuple
/// in the world. Realizations are looked for inside a subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialType {
    pub params: Vec<usize>,
    pub witness: Vec<usize>,
    pub strength: Strength,
}

impl PartialType {
    pub fn new(params: Vec<usize>, witness: Vec<usize>, strength: Strength) -> Self {
        PartialType { params, witness, strength }
    }

    /// Realizations inside `within`, lexicographically.
    pub fn realizations(&self, world: &FiniteStructure, within: &BTreeSet<usize>) -> Result<Vec<Vec<usize>>> {
        let n = world.size();
        let m = self.witness.len();
        if m == 0 {
            return Err(Error::Inexpressible("empty witness tuple".into()));
        }
        if let Some(e) = self.params.iter().chain(&self.witness).chain(within).find(|&&e| e >= n) {
            return Err(Error::Inexpressible(format!("element {e} is outside the world")));
        }
        let with_params = |t: &[usize]| -> Vec<usize> { t.iter().chain(&self.params).copied().collect() };
        let target = qf_token(world, &with_params(&self.witness));
        let elems: Vec<usize> = within.iter().copied().collect();
        let mut out: Vec<Vec<usize>> = all_tuples(elems.len(), m)
            .into_iter()
            .map(|t| t.iter().map(|&i| elems[i]).collect::<Vec<usize>>())
            .filter(|t| qf_token(world, &with_params(t)) == target)
            .collect();
        if let Strength::Colour(k) = self.strength {
            if k < m {
                return Err(Error::Inexpressible(format!("a {m}-tuple has no {k}-variable color")));
            }
            let named = name_params(world, &self.params)?;
            let p = refine_k_types(&named, k).map_err(|e| Error::Inexpressible(e.to_string()))?;
            let color = p.padded_color(0, &self.witness);
            out.retain(|t| p.padded_color(0, t) == color);
        }
        Ok(out)
    }
}

/// The world with one unary predicate `P<i>` per parameter.
fn name_params(world: &FiniteStructure, params: &[usize]) -> Result<FiniteStructure> {
    let mut rels = world.signature().relations().to_vec();
    let base = rels.len();
    for i in 0..params.len() {
        rels.push((format!("P{i}"), 1));
    }
    let mut out = FiniteStructure::new(Signature::new(rels)?, world.size())?;
    for rel in 0..base {
        for t in world.facts(rel) {
            out.insert(rel, t.clone())?;
        }
    }
    for (i, &p) in params.iter().enumerate() {
        out.insert(base + i, vec![p])?;
    }
    Ok(out)
}

/// Membership of `D'` (the base of `cg`) in the deviation of `π` over `C`
/// with respect to `D`: `π` is realized in `D'`, and every realization
/// separated from `D` over `BC` fails to be separated from `D` over `C`.
pub fn deviation_member(
    cg: &ConstructionGraph,
    world: &FiniteStructure,
    pi: &PartialType,
    b: &BTreeSet<usize>,
    c: &BTreeSet<usize>,
    d: &BTreeSet<usize>,
    limit: usize,
) -> Result<bool> {
    let bc: BTreeSet<usize> = b.union(c).copied().collect();
    if let Some(p) = pi.params.iter().find(|p| !bc.contains(p)) {
        return Err(Error::Inexpressible(format!("parameter {p} is not in BC")));
    }
    if !b.is_subset(d) || !c.is_subset(d) || !d.is_subset(cg.base()) {
        return Err(Error::Program("need B, C ⊆ D ⊆ D'".into()));
    }
    let real = pi.realizations(world, cg.base())?;
    if real.is_empty() {
        return Ok(false);
    }
    for t in &real {
        let range: BTreeSet<usize> = t.iter().copied().collect();
        if locally_separated(cg, &range, d, &bc, limit)? && locally_separated(cg, &range, d, c, limit)? {
            return Ok(false);
        }
    }
    Ok(true)
}
