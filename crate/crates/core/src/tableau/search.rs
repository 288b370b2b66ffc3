use std::collections::BTreeSet;

use super::{check_axioms, equality_pattern, Tableau, TableauTheory};
use crate::error::{Error, Result};
use crate::invariant::{apply_perm, permutations};
use crate::structure::{all_tuples, encode};

struct Search<'a> {
    th: &'a TableauTheory,
    k: usize,
    n: usize,
    perms: Vec<Vec<usize>>,
    orbits: Vec<Vec<usize>>,
    typing: Vec<Option<usize>>,
}

impl Search<'_> {
    /// G4 between `code` and its position-0 neighbours, in both roles.
    fn locally_consistent(&self, code: usize) -> bool {
        let Some(gamma) = self.typing[code] else { return true };
        let tu = crate::pebble::decode(code, self.n, self.k);
        let mut moved = tu.clone();
        for y in 0..self.n {
            moved[0] = y;
            if let Some(delta) = self.typing[encode(&moved, self.n)] {
                // moved is a neighbour of tu, and tu is a neighbour of moved
                if !self.th.acc(gamma).contains(&delta) || !self.th.acc(delta).contains(&gamma) {
                    return false;
                }
            }
        }
        true
    }

    fn tableau(&self) -> Tableau {
        let mut t = Tableau::new(self.k, self.n);
        for (code, ty) in self.typing.iter().enumerate() {
            if let Some(ty) = ty {
                t.add(*ty, &crate::pebble::decode(code, self.n, self.k));
            }
        }
        t
    }

    fn run(&mut self, i: usize) -> bool {
        if i == self.orbits.len() {
            // G1-G4 hold by construction; G5 and G6 are checked per leaf
            return check_axioms(&self.tableau(), self.th).all_ok();
        }
        let rep = self.orbits[i].clone();
        let pat = equality_pattern(&rep);
        for alpha in 1..=self.th.type_count() {
            if self.th.mu(alpha) != pat {
                continue;
            }
            let mut set = Vec::new();
            let mut ok = true;
            for sigma in &self.perms {
                let code = encode(&apply_perm(&rep, sigma), self.n);
                let beta = self.th.permuted(alpha, sigma);
                match self.typing[code] {
                    Some(b) if b != beta => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        self.typing[code] = Some(beta);
                        set.push(code);
                    }
                }
            }
            if ok && set.iter().all(|&c| self.locally_consistent(c)) && self.run(i + 1) {
                return true;
            }
            for c in set {
                self.typing[c] = None;
            }
        }
        false
    }
}

/// Searches for a model of `T^G` extending `a` by fresh elements, trying
/// sizes `|a|, |a|+1, ..., max_size` in turn. `a` must satisfy G1-G4.
pub fn cap_search(a: &Tableau, th: &TableauTheory, max_size: usize) -> Result<Option<Tableau>> {
    if a.k() != th.k() {
        return Err(Error::KMismatch(a.k(), th.k()));
    }
    if max_size < a.size() {
        return Err(Error::SearchBound {
            max: max_size,
            size: a.size(),
        });
    }
    let rep = check_axioms(a, th);
    if !rep.universal_ok() {
        let ax = rep.failing()[0];
        return Err(Error::NotAModel(format!(
            "input violates {ax}: {}",
            rep.witness(ax).expect("failing").message
        )));
    }
    let k = th.k();
    let perms = permutations(k);
    for n in a.size()..=max_size {
        let mut typing = vec![None; n.pow(k as u32)];
        for tu in all_tuples(a.size(), k) {
            typing[encode(&tu, n)] = a.type_of(&tu);
        }
        let orbits: BTreeSet<Vec<usize>> = all_tuples(n, k)
            .into_iter()
            .filter(|tu| tu.iter().any(|&e| e >= a.size()))
            .map(|tu| perms.iter().map(|s| apply_perm(&tu, s)).min().expect("k > 0"))
            .collect();
        let mut s = Search {
            th,
            k,
            n,
            perms: perms.clone(),
            orbits: orbits.into_iter().collect(),
            typing,
        };
        if s.run(0) {
            return Ok(Some(s.tableau()));
        }
    }
    Ok(None)
}
