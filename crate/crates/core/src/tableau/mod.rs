//! Game tableaux: structures in the signature of type symbols `R_α`, the
//! axioms G1-G6, the translations to and from home-signature structures,
//! amalgamation and a bounded cappedness search.

mod amalgam;
mod search;

pub use amalgam::{amalgamate, AmalgamResult, AmalgamStep};
pub use search::cap_search;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::error::{parse_err, Error, Result};
use crate::invariant::{apply_perm, build_invariant, permutations, InvariantStructure};
use crate::pebble::token_pattern;
use crate::structure::{all_tuples, encode, for_each_index_tuple, strip_comment, FiniteStructure, PartialMap};

/// Type data of `T = Th^k(M0)` read off its invariant. Types are the
/// invariant's classes `1..=N`.
#[derive(Debug, Clone)]
pub struct TableauTheory {
    inv: InvariantStructure,
    k: usize,
    mu: Vec<Vec<usize>>,
    acc: Vec<Vec<usize>>,
    /// `facts[α-1][rel]`: index maps `f` with `α ⊨ R(x_f)`.
    facts: Vec<Vec<Vec<Vec<usize>>>>,
    /// `image[α-1][g]`: type of `ā∘g` for `ā ⊨ α`, `g` encoded base k.
    image: Vec<Vec<usize>>,
}

impl TableauTheory {
    pub fn from_invariant(inv: InvariantStructure) -> Result<Self> {
        inv.check_laws().map_err(Error::NotAModel)?;
        let k = inv.k();
        let n = inv.class_count();
        let sig = inv.signature().clone();
        let mu: Vec<Vec<usize>> = (1..=n).map(|c| token_pattern(inv.qf_token(c))).collect();
        let acc: Vec<Vec<usize>> = (1..=n).map(|c| inv.acc_of(c).collect()).collect();
        let mut facts = Vec::with_capacity(n);
        for c in 1..=n {
            let bits: Vec<&str> = inv.qf_token(c).split('/').skip(1).collect();
            let mut per_rel = Vec::with_capacity(sig.len());
            for (rel, (_, arity)) in sig.relations().iter().enumerate() {
                let b = bits[rel].as_bytes();
                let mut maps = Vec::new();
                for_each_index_tuple(k, *arity, |f| {
                    if b[encode(f, k)] == b'1' {
                        maps.push(f.to_vec());
                    }
                    true
                });
                per_rel.push(maps);
            }
            facts.push(per_rel);
        }
        let mut th = TableauTheory {
            inv,
            k,
            mu,
            acc,
            facts,
            image: Vec::new(),
        };
        th.image = th.image_table()?;
        Ok(th)
    }

    /// Theory of `m` at `k` variables.
    pub fn of_structure(m: &FiniteStructure, k: usize) -> Result<Self> {
        Self::from_invariant(build_invariant(m, k)?)
    }

    pub fn invariant(&self) -> &InvariantStructure {
        &self.inv
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn type_count(&self) -> usize {
        self.mu.len()
    }

    /// Equality pattern `μ_α` as first-occurrence labels.
    pub fn mu(&self, alpha: usize) -> &[usize] {
        &self.mu[alpha - 1]
    }

    pub fn acc(&self, alpha: usize) -> &[usize] {
        &self.acc[alpha - 1]
    }

    /// `α^σ`: the type of `ā∘σ` for `ā ⊨ α`.
    pub fn permuted(&self, alpha: usize, sigma: &[usize]) -> usize {
        self.inv.perm(sigma, alpha)
    }

    /// Type of `(a_{g(0)}, ..., a_{g(k-1)})` for `ā ⊨ α`.
    pub fn map_type(&self, alpha: usize, g: &[usize]) -> usize {
        self.image[alpha - 1][encode(g, self.k)]
    }

    /// Type of the first `t` coordinates padded by the last of them.
    pub fn prefix_type(&self, alpha: usize, t: usize) -> usize {
        let g: Vec<usize> = (0..self.k).map(|i| i.min(t - 1)).collect();
        self.map_type(alpha, &g)
    }

    /// Type of the coordinates `t..k` padded by the last of them.
    pub fn suffix_type(&self, alpha: usize, t: usize) -> usize {
        let g: Vec<usize> = (0..self.k).map(|i| (t + i).min(self.k - 1)).collect();
        self.map_type(alpha, &g)
    }

    fn subst(&self, alpha: usize, j: usize, i: usize) -> Result<usize> {
        // types of ā[j ↦ m] are perm_τ of acc(perm_τ(α)) for τ = (0 j)
        let mut tau: Vec<usize> = (0..self.k).collect();
        tau.swap(0, j);
        let moved = self.permuted(alpha, &tau);
        let hits: Vec<usize> = self
            .acc(moved)
            .iter()
            .map(|&b| self.permuted(b, &tau))
            .filter(|&b| self.mu(b)[j] == self.mu(b)[i])
            .collect();
        match hits[..] {
            [b] => Ok(b),
            _ => Err(Error::NotAModel(format!(
                "substituting position {j} by {i} in type {alpha} is not determined"
            ))),
        }
    }

    /// Precomputes `map_type` by searching the label vectors reachable from
    /// the identity under permutations and single-position substitutions.
    fn image_table(&self) -> Result<Vec<Vec<usize>>> {
        let k = self.k;
        let space = k.pow(k as u32);
        let start: Vec<usize> = (0..k).collect();
        // parent[state] = (previous state, op)
        let mut parent: Vec<Option<(usize, Op)>> = vec![None; space];
        let mut seen = vec![false; space];
        let mut order = Vec::with_capacity(space);
        let mut queue = VecDeque::from([start.clone()]);
        seen[encode(&start, k)] = true;
        let perms = permutations(k);
        while let Some(state) = queue.pop_front() {
            let code = encode(&state, k);
            order.push(code);
            let mut push = |next: Vec<usize>, op: Op, queue: &mut VecDeque<Vec<usize>>| {
                let c = encode(&next, k);
                if !seen[c] {
                    seen[c] = true;
                    parent[c] = Some((code, op));
                    queue.push_back(next);
                }
            };
            for (p, sigma) in perms.iter().enumerate() {
                push(apply_perm(&state, sigma), Op::Perm(p), &mut queue);
            }
            for j in 0..k {
                for i in 0..k {
                    if i != j {
                        let mut next = state.clone();
                        next[j] = state[i];
                        push(next, Op::Subst(j, i), &mut queue);
                    }
                }
            }
        }
        debug_assert_eq!(order.len(), space);
        let n = self.type_count();
        let mut table = vec![vec![0usize; space]; n];
        for alpha in 1..=n {
            let row = &mut table[alpha - 1];
            for &code in &order {
                row[code] = match parent[code] {
                    None => alpha,
                    Some((prev, Op::Perm(p))) => self.permuted(row[prev], &perms[p]),
                    Some((prev, Op::Subst(j, i))) => self.subst(row[prev], j, i)?,
                };
            }
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Perm(usize),
    Subst(usize, usize),
}

/// A `ρ^G`-structure: a size and a (not necessarily functional) typing of
/// k-tuples by type indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tableau {
    k: usize,
    size: usize,
    types: Vec<Vec<usize>>,
}

impl Tableau {
    pub fn new(k: usize, size: usize) -> Self {
        Tableau {
            k,
            size,
            types: vec![Vec::new(); size.pow(k as u32)],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn types_at(&self, tuple: &[usize]) -> &[usize] {
        &self.types[encode(tuple, self.size)]
    }

    /// The unique type of a tuple, if it has exactly one.
    pub fn type_of(&self, tuple: &[usize]) -> Option<usize> {
        match self.types_at(tuple) {
            [a] => Some(*a),
            _ => None,
        }
    }

    pub fn add(&mut self, alpha: usize, tuple: &[usize]) {
        let slot = &mut self.types[encode(tuple, self.size)];
        if let Err(p) = slot.binary_search(&alpha) {
            slot.insert(p, alpha);
        }
    }

    pub fn remove(&mut self, alpha: usize, tuple: &[usize]) -> bool {
        let slot = &mut self.types[encode(tuple, self.size)];
        match slot.binary_search(&alpha) {
            Ok(p) => {
                slot.remove(p);
                true
            }
            Err(_) => false,
        }
    }

    /// Every `(α, tuple)` fact, ordered by type then tuple.
    pub fn facts(&self) -> Vec<(usize, Vec<usize>)> {
        let mut out = Vec::new();
        for (idx, ts) in self.types.iter().enumerate() {
            for &a in ts {
                out.push((a, crate::pebble::decode(idx, self.size, self.k)));
            }
        }
        out.sort();
        out
    }

    pub fn realized_types(&self) -> BTreeSet<usize> {
        self.types.iter().flatten().copied().collect()
    }

    /// Sub-tableau induced on `elems`, relabeled order-preservingly; also
    /// returns the map new -> old.
    pub fn induced(&self, elems: &BTreeSet<usize>) -> Result<(Tableau, Vec<usize>)> {
        if elems.is_empty() {
            return Err(Error::EmptySet);
        }
        if let Some(&elem) = elems.iter().find(|&&e| e >= self.size) {
            return Err(Error::OutOfRange { elem, size: self.size });
        }
        let old: Vec<usize> = elems.iter().copied().collect();
        let mut sub = Tableau::new(self.k, old.len());
        for idx in all_tuples(old.len(), self.k) {
            let orig: Vec<usize> = idx.iter().map(|&i| old[i]).collect();
            sub.types[encode(&idx, old.len())] = self.types_at(&orig).to_vec();
        }
        Ok((sub, old))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut k = None;
        let mut t: Option<Tableau> = None;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            let num = |w: &str| -> Result<usize> { w.parse().map_err(|_| parse_err(ln, format!("expected a number, got `{w}`"))) };
            match words[0] {
                "k" if words.len() == 2 && k.is_none() && t.is_none() => {
                    let v = num(words[1])?;
                    if v == 0 {
                        return Err(parse_err(ln, "k must be positive"));
                    }
                    k = Some(v);
                }
                "universe" if words.len() == 2 && t.is_none() => {
                    let kk = k.ok_or_else(|| parse_err(ln, "`k` line must come first"))?;
                    let n = num(words[1])?;
                    if n == 0 {
                        return Err(parse_err(ln, "universe must be nonempty"));
                    }
                    t = Some(Tableau::new(kk, n));
                }
                "type" => {
                    let tab = t.as_mut().ok_or_else(|| parse_err(ln, "`type` before `universe`"))?;
                    if words.len() != 2 + tab.k {
                        return Err(parse_err(ln, format!("expected a type index and {} elements", tab.k)));
                    }
                    let alpha = num(words[1])?;
                    if alpha == 0 {
                        return Err(parse_err(ln, "type indices start at 1"));
                    }
                    let tuple: Vec<usize> = words[2..].iter().map(|w| num(w)).collect::<Result<_>>()?;
                    if let Some(&e) = tuple.iter().find(|&&e| e >= tab.size) {
                        return Err(parse_err(ln, format!("element {e} out of range for universe of size {}", tab.size)));
                    }
                    tab.add(alpha, &tuple);
                }
                _ => return Err(parse_err(ln, format!("unrecognized line `{line}`"))),
            }
        }
        t.ok_or_else(|| parse_err(text.lines().count().max(1), "missing `universe` line"))
    }
}

impl fmt::Display for Tableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "k {}", self.k)?;
        writeln!(f, "universe {}", self.size)?;
        for (a, t) in self.facts() {
            write!(f, "type {a}")?;
            for e in t {
                write!(f, " {e}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// `M^G`: every k-tuple typed by its class. Fails unless `m ≡^k` the
/// theory's reference structure.
pub fn to_tableau(m: &FiniteStructure, th: &TableauTheory) -> Result<Tableau> {
    let k = th.k();
    let p = crate::pebble::refine_joint(&[m], k, Default::default())?;
    let inv = InvariantStructure::from_partition(&p, 0, m.signature());
    if !crate::invariant::invariants_equal(&inv, th.invariant())? {
        return Err(Error::NotAModel(format!(
            "structure of size {} has a different {k}-variable invariant",
            m.size()
        )));
    }
    let realized: Vec<u32> = p.realized(0).into_iter().collect();
    let class_of: HashMap<u32, usize> = realized.iter().enumerate().map(|(i, &c)| (c, i + 1)).collect();
    let mut t = Tableau::new(k, m.size());
    for (idx, c) in p.colors_of(0).iter().enumerate() {
        t.types[idx] = vec![class_of[c]];
    }
    Ok(t)
}

/// `𝔄^mod`: home-signature facts projected from the typed tuples.
pub fn realize(t: &Tableau, th: &TableauTheory) -> Result<FiniteStructure> {
    if t.k != th.k() {
        return Err(Error::KMismatch(t.k, th.k()));
    }
    let mut m = FiniteStructure::new(th.invariant().signature().clone(), t.size)?;
    for (idx, ts) in t.types.iter().enumerate() {
        let tuple = crate::pebble::decode(idx, t.size, t.k);
        let &[alpha] = &ts[..] else {
            return Err(Error::Untyped(tuple));
        };
        if alpha > th.type_count() {
            return Err(Error::Untyped(tuple));
        }
        for (rel, maps) in th.facts[alpha - 1].iter().enumerate() {
            for f in maps {
                m.insert(rel, f.iter().map(|&i| tuple[i]).collect())?;
            }
        }
    }
    Ok(m)
}

/// Whether `f` is a partial `ρ^G`-isomorphism: every k-tuple over `dom(f)`
/// carries the same types as its image.
pub fn is_partial_tableau_iso(a: &Tableau, b: &Tableau, f: &PartialMap) -> Result<bool> {
    if a.k != b.k {
        return Err(Error::KMismatch(a.k, b.k));
    }
    for &(x, y) in f.pairs() {
        if x >= a.size {
            return Err(Error::OutOfRange { elem: x, size: a.size });
        }
        if y >= b.size {
            return Err(Error::OutOfRange { elem: y, size: b.size });
        }
    }
    let pairs = f.pairs();
    if pairs.is_empty() {
        return Ok(true);
    }
    Ok(for_each_index_tuple(pairs.len(), a.k, |idx| {
        let src: Vec<usize> = idx.iter().map(|&i| pairs[i].0).collect();
        let dst: Vec<usize> = idx.iter().map(|&i| pairs[i].1).collect();
        a.types_at(&src) == b.types_at(&dst)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Axiom {
    G1,
    G2,
    G3,
    G4,
    G5,
    G6,
}

impl Axiom {
    pub const ALL: [Axiom; 6] = [Axiom::G1, Axiom::G2, Axiom::G3, Axiom::G4, Axiom::G5, Axiom::G6];
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// A concrete reason an axiom fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub tuple: Vec<usize>,
    /// Extra element for G4 (`y`), or the type for G5/G6.
    pub detail: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomReport {
    pub results: Vec<(Axiom, Option<Witness>)>,
}

impl AxiomReport {
    pub fn passes(&self, ax: Axiom) -> bool {
        self.witness(ax).is_none()
    }

    pub fn witness(&self, ax: Axiom) -> Option<&Witness> {
        self.results.iter().find(|r| r.0 == ax).and_then(|r| r.1.as_ref())
    }

    /// G1-G4, the universal part.
    pub fn universal_ok(&self) -> bool {
        [Axiom::G1, Axiom::G2, Axiom::G3, Axiom::G4].iter().all(|&a| self.passes(a))
    }

    pub fn all_ok(&self) -> bool {
        Axiom::ALL.iter().all(|&a| self.passes(a))
    }

    pub fn failing(&self) -> Vec<Axiom> {
        self.results.iter().filter(|r| r.1.is_some()).map(|r| r.0).collect()
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (ax, w) in &self.results {
            match w {
                None => writeln!(f, "{ax} pass")?,
                Some(w) => writeln!(f, "{ax} fail {}", w.message)?,
            }
        }
        writeln!(f, "universal {}", if self.universal_ok() { "pass" } else { "fail" })
    }
}

fn fmt_tuple(t: &[usize]) -> String {
    let parts: Vec<String> = t.iter().map(|e| e.to_string()).collect();
    format!("({})", parts.join(","))
}

fn equality_pattern(t: &[usize]) -> Vec<usize> {
    let mut seen: Vec<usize> = Vec::new();
    t.iter()
        .map(|&e| match seen.iter().position(|&s| s == e) {
            Some(p) => p,
            None => {
                seen.push(e);
                seen.len() - 1
            }
        })
        .collect()
}

/// Checks G1-G6, reporting the first violation of each in tuple order.
pub fn check_axioms(t: &Tableau, th: &TableauTheory) -> AxiomReport {
    let k = t.k;
    let n = t.size;
    let ntypes = th.type_count();
    let tuples = all_tuples(n, k);
    let perms = permutations(k);
    let mut results = Vec::new();
    let mismatch = t.k != th.k();

    let first = |pred: &mut dyn FnMut(&[usize]) -> Option<Witness>| -> Option<Witness> {
        if mismatch {
            return Some(Witness {
                tuple: Vec::new(),
                detail: None,
                message: format!("tableau has k = {} but the theory has k = {}", t.k, th.k()),
            });
        }
        tuples.iter().find_map(|tu| pred(tu))
    };

    results.push((
        Axiom::G1,
        first(&mut |tu| {
            let ts = t.types_at(tu);
            if ts.len() != 1 || ts[0] == 0 || ts[0] > ntypes {
                Some(Witness {
                    tuple: tu.to_vec(),
                    detail: None,
                    message: format!("{} has types {:?}", fmt_tuple(tu), ts),
                })
            } else {
                None
            }
        }),
    ));

    let valid = |a: usize| a >= 1 && a <= ntypes;
    results.push((
        Axiom::G2,
        first(&mut |tu| {
            let pat = equality_pattern(tu);
            t.types_at(tu).iter().filter(|&&a| valid(a)).find(|&&a| th.mu(a) != pat).map(|&a| Witness {
                tuple: tu.to_vec(),
                detail: Some(a),
                message: format!("{} has type {a} with a different equality type", fmt_tuple(tu)),
            })
        }),
    ));

    results.push((
        Axiom::G3,
        first(&mut |tu| {
            for &a in t.types_at(tu).iter().filter(|&&a| valid(a)) {
                for sigma in &perms {
                    let img = apply_perm(tu, sigma);
                    let want = th.permuted(a, sigma);
                    if !t.types_at(&img).contains(&want) {
                        return Some(Witness {
                            tuple: tu.to_vec(),
                            detail: Some(a),
                            message: format!(
                                "{} has type {a} but {} lacks type {want}",
                                fmt_tuple(tu),
                                fmt_tuple(&img)
                            ),
                        });
                    }
                }
            }
            None
        }),
    ));

    results.push((
        Axiom::G4,
        first(&mut |tu| {
            for &a in t.types_at(tu).iter().filter(|&&a| valid(a)) {
                let acc = th.acc(a);
                let mut moved = tu.to_vec();
                for y in 0..n {
                    moved[0] = y;
                    if !t.types_at(&moved).iter().any(|b| acc.contains(b)) {
                        return Some(Witness {
                            tuple: tu.to_vec(),
                            detail: Some(y),
                            message: format!(
                                "{} has type {a} but {} has no accessible type",
                                fmt_tuple(tu),
                                fmt_tuple(&moved)
                            ),
                        });
                    }
                }
            }
            None
        }),
    ));

    let realized = t.realized_types();
    let g5 = if mismatch {
        first(&mut |_| None)
    } else {
        (1..=ntypes).find(|a| !realized.contains(a)).map(|a| Witness {
            tuple: Vec::new(),
            detail: Some(a),
            message: format!("type {a} is not realized"),
        })
    };
    results.push((Axiom::G5, g5));

    results.push((
        Axiom::G6,
        first(&mut |tu| {
            for &a in t.types_at(tu).iter().filter(|&&a| valid(a)) {
                for &b in th.acc(a) {
                    let mut moved = tu.to_vec();
                    let found = (0..n).any(|y| {
                        moved[0] = y;
                        t.types_at(&moved).contains(&b)
                    });
                    if !found {
                        return Some(Witness {
                            tuple: tu.to_vec(),
                            detail: Some(b),
                            message: format!("{} has type {a} but no y gives type {b} at position 0", fmt_tuple(tu)),
                        });
                    }
                }
            }
            None
        }),
    ));

    AxiomReport { results }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::Signature;

    fn pure(n: usize) -> FiniteStructure {
        FiniteStructure::new(Signature::digraph(), n).unwrap()
    }

    #[test]
    fn own_tableau_realizes_every_type_and_passes() {
        let g = FiniteStructure::digraph(4, &[(0, 1), (1, 2), (2, 0), (3, 3)]).unwrap();
        for k in 2..=3 {
            let th = TableauTheory::of_structure(&g, k).unwrap();
            let t = to_tableau(&g, &th).unwrap();
            assert_eq!(t.realized_types(), (1..=th.type_count()).collect());
            let rep = check_axioms(&t, &th);
            assert!(rep.all_ok(), "{rep}");
            assert_eq!(realize(&t, &th).unwrap(), g);
            let text = t.to_string();
            assert_eq!(Tableau::parse(&text).unwrap(), t);
        }
    }

    #[test]
    fn inequivalent_structure_is_rejected() {
        let th = TableauTheory::of_structure(&FiniteStructure::directed_cycle(3).unwrap(), 2).unwrap();
        assert!(matches!(
            to_tableau(&FiniteStructure::directed_cycle(6).unwrap(), &th),
            Err(Error::NotAModel(_))
        ));
    }

    #[test]
    fn map_type_agrees_with_direct_computation() {
        let g = FiniteStructure::digraph(4, &[(0, 1), (1, 2), (2, 0), (1, 3)]).unwrap();
        let th = TableauTheory::of_structure(&g, 3).unwrap();
        let t = to_tableau(&g, &th).unwrap();
        for tu in all_tuples(4, 3) {
            let a = t.type_of(&tu).unwrap();
            for gmap in all_tuples(3, 3) {
                let img: Vec<usize> = gmap.iter().map(|&i| tu[i]).collect();
                assert_eq!(th.map_type(a, &gmap), t.type_of(&img).unwrap());
            }
        }
    }

    #[test]
    fn deletion_breaks_g1_at_that_tuple() {
        let th = TableauTheory::of_structure(&pure(3), 2).unwrap();
        let mut t = to_tableau(&pure(3), &th).unwrap();
        let a = t.type_of(&[0, 1]).unwrap();
        t.remove(a, &[0, 1]);
        let rep = check_axioms(&t, &th);
        assert_eq!(rep.witness(Axiom::G1).unwrap().tuple, vec![0, 1]);
        assert!(matches!(realize(&t, &th), Err(Error::Untyped(v)) if v == vec![0, 1]));
    }

    #[test]
    fn one_point_round_trip() {
        let one = pure(1);
        let th = TableauTheory::of_structure(&one, 2).unwrap();
        let t = to_tableau(&one, &th).unwrap();
        assert_eq!(realize(&t, &th).unwrap().size(), 1);
    }

    #[test]
    fn parse_errors() {
        assert!(Tableau::parse("universe 2\n").is_err());
        assert!(Tableau::parse("k 2\nuniverse 2\ntype 1 0 5\n").is_err());
        assert!(Tableau::parse("k 2\nuniverse 2\ntype 0 0 1\n").is_err());
    }
}
