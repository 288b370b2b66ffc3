use std::collections::BTreeSet;
use std::fmt;

use super::{check_axioms, Tableau, TableauTheory};
use crate::error::{Error, Result};
use crate::invariant::{apply_perm, permutations};
use crate::structure::{all_tuples, encode, PartialMap};

/// One typing step of the amalgamation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmalgamStep {
    pub step: usize,
    /// Length of the `M0` part of the chosen tuple.
    pub t: usize,
    /// Chosen tuple, as elements of `Z = M0 ⊔ (M1 ∖ A)`.
    pub tuple: Vec<usize>,
    pub eta0: usize,
    pub eta1: usize,
    pub alpha: usize,
    /// Newly typed tuples including permuted images.
    pub typed: usize,
    /// New identifications `(x, y)` with `x ∈ M0`, `y ∈ M1 ∖ A`.
    pub merges: Vec<(usize, usize)>,
    /// Mixed tuples still untyped afterwards.
    pub remaining: usize,
}

impl fmt::Display for AmalgamStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tu: Vec<String> = self.tuple.iter().map(|e| e.to_string()).collect();
        write!(
            f,
            "step {} t {} tuple ({}) eta0 {} eta1 {} alpha {} typed {} merges {:?} remaining {}",
            self.step,
            self.t,
            tu.join(","),
            self.eta0,
            self.eta1,
            self.alpha,
            self.typed,
            self.merges,
            self.remaining
        )
    }
}

#[derive(Debug, Clone)]
pub struct AmalgamResult {
    pub c: Tableau,
    /// `M0 -> C`.
    pub g0: PartialMap,
    /// `M1 -> C`.
    pub g1: PartialMap,
    pub log: Vec<AmalgamStep>,
    /// `Z` is `M0` (elements `0..|M0|`) followed by `M1 ∖ A`; this maps each
    /// `M1` element to its place in `Z`.
    pub m1_in_z: Vec<usize>,
}

impl AmalgamResult {
    /// The step bound `|types|^2`.
    pub fn step_bound(th: &TableauTheory) -> usize {
        th.type_count() * th.type_count()
    }
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        self.parent[x] = r;
        r
    }
}

struct State<'a> {
    th: &'a TableauTheory,
    m0: &'a Tableau,
    m1: &'a Tableau,
    k: usize,
    nz: usize,
    n0: usize,
    /// Z element -> M1 element, for Z elements in the M1 copy.
    to_m1: Vec<Option<usize>>,
    typing: Vec<Option<usize>>,
    /// Partner under E: M0 element -> M1∖A element and back.
    partner: Vec<Option<usize>>,
}

impl State<'_> {
    fn in_s1(&self, z: usize) -> bool {
        self.to_m1[z].is_some()
    }

    fn is_mixed(&self, tu: &[usize]) -> bool {
        tu.iter().any(|&z| z >= self.n0) && tu.iter().any(|&z| !self.in_s1(z))
    }

    /// Length of the leading `M0` part when `tu` is arranged as an `M0`
    /// part followed by an `M1 ∖ A` part.
    fn arranged(&self, tu: &[usize]) -> Option<usize> {
        let t = tu.iter().take_while(|&&z| z < self.n0).count();
        (t > 0 && t < self.k && tu[t..].iter().all(|&z| z >= self.n0)).then_some(t)
    }

    fn padded(tu: &[usize], k: usize) -> Vec<usize> {
        let mut v = tu.to_vec();
        let last = *v.last().expect("nonempty");
        v.resize(k, last);
        v
    }

    fn m1_tuple(&self, tu: &[usize]) -> Vec<usize> {
        tu.iter().map(|&z| self.to_m1[z].expect("in M1")).collect()
    }

    /// Block tuples `ū·v̄` with `ū ∈ η0(M0)`, `v̄ ∈ η1(M1 ∖ A)`.
    fn block(&self, t: usize, eta0: usize, eta1: usize) -> Vec<Vec<usize>> {
        let k = self.k;
        let left: Vec<Vec<usize>> = all_tuples(self.n0, t)
            .into_iter()
            .filter(|u| self.m0.type_of(&Self::padded(u, k)) == Some(eta0))
            .collect();
        let right: Vec<Vec<usize>> = all_tuples(self.nz - self.n0, k - t)
            .into_iter()
            .map(|v| v.into_iter().map(|i| i + self.n0).collect::<Vec<_>>())
            .filter(|v| self.m1.type_of(&Self::padded(&self.m1_tuple(v), k)) == Some(eta1))
            .collect();
        let mut out = Vec::with_capacity(left.len() * right.len());
        for u in &left {
            for v in &right {
                let mut w = u.clone();
                w.extend_from_slice(v);
                out.push(w);
            }
        }
        out
    }

    /// Tries to type the untyped block tuples with `alpha`. Returns the new
    /// typing entries and merges, or `None` if `alpha` is not admissible.
    fn attempt(&self, block: &[Vec<usize>], alpha: usize, t: usize) -> Option<Attempt> {
        let k = self.k;
        let mu = self.th.mu(alpha);
        let perms = permutations(k);
        let mut partner = self.partner.clone();
        let mut merges = Vec::new();
        let mut assigned: Vec<(usize, usize)> = Vec::new();
        let mut fresh: BTreeSet<usize> = BTreeSet::new();
        for w in block {
            if self.typing[encode(w, self.nz)].is_some() {
                continue;
            }
            // cross identifications required by μ_α, kept injective on each side
            for i in 0..t {
                for j in t..k {
                    if mu[i] != mu[j] {
                        continue;
                    }
                    let (x, y) = (w[i], w[j]);
                    if x < self.n0 && self.in_s1(x) {
                        // an element of A cannot absorb an element of M1 ∖ A
                        return None;
                    }
                    match (partner[x], partner[y]) {
                        (None, None) => {
                            partner[x] = Some(y);
                            partner[y] = Some(x);
                            merges.push((x, y));
                        }
                        (Some(px), Some(_)) if px == y => {}
                        _ => return None,
                    }
                }
            }
            for sigma in &perms {
                let img = apply_perm(w, sigma);
                let code = encode(&img, self.nz);
                let beta = self.th.permuted(alpha, sigma);
                match self.typing[code] {
                    Some(b) if b != beta => return None,
                    Some(_) => {}
                    None => {
                        if fresh.insert(code) {
                            assigned.push((code, beta));
                        } else if assigned.iter().any(|&(c, b)| c == code && b != beta) {
                            return None;
                        }
                    }
                }
            }
        }
        Some(Attempt {
            assigned,
            merges,
            partner,
        })
    }

    /// The typing stays single-valued on `Z/E`.
    fn quotient_consistent(&self, typing: &[Option<usize>], partner: &[Option<usize>]) -> bool {
        let canon = |z: usize| partner[z].map_or(z, |p| p.min(z));
        let mut seen: Vec<Option<usize>> = vec![None; typing.len()];
        for (code, ty) in typing.iter().enumerate() {
            let Some(ty) = ty else { continue };
            let tu = crate::pebble::decode(code, self.nz, self.k);
            let rep: Vec<usize> = tu.iter().map(|&z| canon(z)).collect();
            let rc = encode(&rep, self.nz);
            match seen[rc] {
                Some(b) if b != *ty => return false,
                _ => seen[rc] = Some(*ty),
            }
        }
        true
    }
}

struct Attempt {
    assigned: Vec<(usize, usize)>,
    merges: Vec<(usize, usize)>,
    partner: Vec<Option<usize>>,
}

fn check_injection(a: &Tableau, m: &Tableau, inj: &[usize], which: &str) -> Result<()> {
    if inj.len() != a.size() {
        return Err(Error::AmalgamPrecondition(format!(
            "injection into {which} has {} entries for |A| = {}",
            inj.len(),
            a.size()
        )));
    }
    let distinct: BTreeSet<usize> = inj.iter().copied().collect();
    if distinct.len() != inj.len() {
        return Err(Error::AmalgamPrecondition(format!("injection into {which} is not injective")));
    }
    if let Some(&e) = inj.iter().find(|&&e| e >= m.size()) {
        return Err(Error::AmalgamPrecondition(format!("injection into {which} hits {e}, outside the universe")));
    }
    for tu in all_tuples(a.size(), a.k()) {
        let img: Vec<usize> = tu.iter().map(|&i| inj[i]).collect();
        if a.types_at(&tu) != m.types_at(&img) {
            return Err(Error::AmalgamPrecondition(format!(
                "A is not an induced sub-tableau of {which}: {tu:?} and its image differ"
            )));
        }
    }
    Ok(())
}

fn check_total(t: &Tableau, th: &TableauTheory, which: &str) -> Result<()> {
    if t.k() != th.k() {
        return Err(Error::KMismatch(t.k(), th.k()));
    }
    let rep = check_axioms(t, th);
    if let Some(w) = rep.witness(super::Axiom::G1) {
        return Err(Error::AmalgamPrecondition(format!("{which} violates G1: {}", w.message)));
    }
    Ok(())
}

/// Amalgamates `M0` and `M1` over `A`, given the embeddings `i0: A -> M0`
/// and `i1: A -> M1`. Both sides must type every tuple exactly once; the
/// remaining model conditions surface as an inadmissible step or a failed
/// final check.
pub fn amalgamate(
    a: &Tableau,
    m0: &Tableau,
    m1: &Tableau,
    i0: &[usize],
    i1: &[usize],
    th: &TableauTheory,
) -> Result<AmalgamResult> {
    let k = th.k();
    for (t, w) in [(a, "A"), (m0, "M0"), (m1, "M1")] {
        check_total(t, th, w)?;
    }
    check_injection(a, m0, i0, "M0")?;
    check_injection(a, m1, i1, "M1")?;

    let n0 = m0.size();
    let shared: Vec<Option<usize>> = {
        let mut v = vec![None; m1.size()];
        for (ai, &e) in i1.iter().enumerate() {
            v[e] = Some(i0[ai]);
        }
        v
    };
    // Z = M0 followed by M1 ∖ A
    let mut m1_to_z = vec![0usize; m1.size()];
    let mut nz = n0;
    for e in 0..m1.size() {
        m1_to_z[e] = match shared[e] {
            Some(z) => z,
            None => {
                nz += 1;
                nz - 1
            }
        };
    }
    let mut to_m1 = vec![None; nz];
    for (e, &z) in m1_to_z.iter().enumerate() {
        to_m1[z] = Some(e);
    }

    let mut typing = vec![None; nz.pow(k as u32)];
    for tu in all_tuples(n0, k) {
        typing[encode(&tu, nz)] = m0.type_of(&tu);
    }
    for tu in all_tuples(m1.size(), k) {
        let z: Vec<usize> = tu.iter().map(|&e| m1_to_z[e]).collect();
        typing[encode(&z, nz)] = m1.type_of(&tu);
    }

    let mut st = State {
        th,
        m0,
        m1,
        k,
        nz,
        n0,
        to_m1,
        typing,
        partner: vec![None; nz],
    };

    let mut untyped: BTreeSet<Vec<usize>> = all_tuples(nz, k)
        .into_iter()
        .filter(|tu| st.is_mixed(tu) && st.typing[encode(tu, nz)].is_none())
        .collect();
    let mut log = Vec::new();
    let mut step = 0;
    while !untyped.is_empty() {
        let (t, tuple) = untyped
            .iter()
            .filter_map(|tu| st.arranged(tu).map(|t| (t, tu.clone())))
            .min()
            .expect("untyped mixed tuples are closed under permutation");
        let eta0 = st.m0.type_of(&State::padded(&tuple[..t], k)).expect("G1 on M0");
        let eta1 = st
            .m1
            .type_of(&State::padded(&st.m1_tuple(&tuple[t..]), k))
            .expect("G1 on M1");
        let block = st.block(t, eta0, eta1);
        // candidates that identify nothing across the split come first, so
        // merges happen only when no free choice exists
        let mut candidates: Vec<usize> = (1..=th.type_count())
            .filter(|&a| th.prefix_type(a, t) == eta0 && th.suffix_type(a, t) == eta1)
            .collect();
        candidates.sort_by_key(|&a| {
            let mu = th.mu(a);
            (mu[..t].iter().any(|l| mu[t..].contains(l)), a)
        });
        let mut chosen = None;
        for alpha in candidates {
            let Some(att) = st.attempt(&block, alpha, t) else { continue };
            let mut typing = st.typing.clone();
            for &(code, b) in &att.assigned {
                typing[code] = Some(b);
            }
            if !st.quotient_consistent(&typing, &att.partner) {
                continue;
            }
            chosen = Some((alpha, att, typing));
            break;
        }
        let Some((alpha, att, typing)) = chosen else {
            return Err(Error::NoAdmissibleType { tuple, t });
        };
        for &(code, _) in &att.assigned {
            untyped.remove(&crate::pebble::decode(code, nz, k));
        }
        st.typing = typing;
        st.partner = att.partner;
        log.push(AmalgamStep {
            step,
            t,
            tuple,
            eta0,
            eta1,
            alpha,
            typed: att.assigned.len(),
            merges: att.merges,
            remaining: untyped.len(),
        });
        step += 1;
    }

    // quotient Z/E, classes numbered by least member
    let mut dsu = Dsu {
        parent: (0..nz).collect(),
    };
    for z in 0..nz {
        if let Some(p) = st.partner[z] {
            let (a, b) = (dsu.find(z), dsu.find(p));
            let (lo, hi) = (a.min(b), a.max(b));
            dsu.parent[hi] = lo;
        }
    }
    let mut class = vec![usize::MAX; nz];
    let mut nc = 0;
    for z in 0..nz {
        let r = dsu.find(z);
        if class[r] == usize::MAX {
            class[r] = nc;
            nc += 1;
        }
        class[z] = class[r];
    }
    let mut c = Tableau::new(k, nc);
    for (code, ty) in st.typing.iter().enumerate() {
        if let Some(ty) = ty {
            let tu = crate::pebble::decode(code, nz, k);
            let img: Vec<usize> = tu.iter().map(|&z| class[z]).collect();
            c.add(*ty, &img);
        }
    }
    let g0 = PartialMap::new((0..n0).map(|e| (e, class[e])))?;
    let g1 = PartialMap::new((0..m1.size()).map(|e| (e, class[m1_to_z[e]])))?;
    Ok(AmalgamResult {
        c,
        g0,
        g1,
        log,
        m1_in_z: m1_to_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{FiniteStructure, Signature};
    use crate::tableau::to_tableau;

    fn pure(n: usize) -> FiniteStructure {
        FiniteStructure::new(Signature::digraph(), n).unwrap()
    }

    #[test]
    fn trivial_amalgam_is_a_copy() {
        let th = TableauTheory::of_structure(&pure(3), 2).unwrap();
        let a = to_tableau(&pure(3), &th).unwrap();
        let id = vec![0, 1, 2];
        let r = amalgamate(&a, &a, &a, &id, &id, &th).unwrap();
        assert_eq!(r.c, a);
        assert!(r.log.is_empty());
    }

    #[test]
    fn pure_sets_amalgamate() {
        let th = TableauTheory::of_structure(&pure(3), 2).unwrap();
        let a = to_tableau(&pure(2), &th).unwrap();
        let m0 = to_tableau(&pure(3), &th).unwrap();
        let m1 = to_tableau(&pure(4), &th).unwrap();
        let r = amalgamate(&a, &m0, &m1, &[0, 1], &[2, 3], &th).unwrap();
        assert!(check_axioms(&r.c, &th).universal_ok());
        assert!(r.log.len() <= AmalgamResult::step_bound(&th));
    }

    #[test]
    fn non_diagonal_type_on_a_diagonal_tuple_has_no_admissible_type() {
        let th = TableauTheory::of_structure(&pure(3), 2).unwrap();
        let a = to_tableau(&pure(2), &th).unwrap();
        let m0 = to_tableau(&pure(3), &th).unwrap();
        let mut m1 = to_tableau(&pure(3), &th).unwrap();
        let diag = m1.type_of(&[2, 2]).unwrap();
        let off = m1.type_of(&[0, 1]).unwrap();
        m1.remove(diag, &[2, 2]);
        m1.add(off, &[2, 2]);
        assert!(matches!(
            amalgamate(&a, &m0, &m1, &[0, 1], &[0, 1], &th),
            Err(Error::NoAdmissibleType { .. })
        ));
    }

    #[test]
    fn bad_injection_is_a_precondition_error() {
        let th = TableauTheory::of_structure(&pure(3), 2).unwrap();
        let a = to_tableau(&pure(2), &th).unwrap();
        let m0 = to_tableau(&pure(3), &th).unwrap();
        assert!(matches!(
            amalgamate(&a, &m0, &m0, &[0, 0], &[0, 1], &th),
            Err(Error::AmalgamPrecondition(_))
        ));
    }
}
