//! Existential k-pebble game, solved as a greatest fixed point over partial
//! isomorphisms with at most k pairs.

use crate::error::{Error, Result};
use crate::structure::FiniteStructure;

pub const DEFAULT_POSITION_CAP: u128 = 1 << 25;

pub fn pebble_game_equivalent(m: &FiniteStructure, n: &FiniteStructure, k: usize) -> Result<bool> {
    pebble_game_equivalent_capped(m, n, k, DEFAULT_POSITION_CAP)
}

/// Duplicator wins the k-pebble game on `(m, n)` iff the empty map survives
/// in the greatest family of partial isomorphisms (at most k pairs) that is
/// closed under restriction and has forth/back extensions below k pairs.
pub fn pebble_game_equivalent_capped(m: &FiniteStructure, n: &FiniteStructure, k: usize, cap: u128) -> Result<bool> {
    if m.signature() != n.signature() {
        return Err(Error::SignatureMismatch(format!(
            "{:?} vs {:?}",
            m.signature().relations(),
            n.signature().relations()
        )));
    }
    let nm = m.size();
    let nn = n.size();
    let pairs = nm * nn;
    let base = pairs as u128 + 1;
    let positions = base.pow(k as u32);
    if positions > cap {
        return Err(Error::PositionCap { positions, cap });
    }
    let base = base as usize;
    let game = Game { m, n, nn, base, k };

    // alive[code] for every sorted set of distinct pair indices that forms
    // a partial isomorphism
    let mut alive = vec![false; positions as usize];
    let mut live: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    enumerate(pairs, k, 0, &mut stack, &mut |set| {
        if game.is_iso(set) {
            alive[game.code(set)] = true;
            live.push(set.to_vec());
        }
    });

    loop {
        let mut changed = false;
        live.retain(|set| {
            let keep = game.survives(set, &alive);
            if !keep {
                alive[game.code(set)] = false;
                changed = true;
            }
            keep
        });
        if !changed {
            break;
        }
    }
    Ok(alive[0])
}

struct Game<'a> {
    m: &'a FiniteStructure,
    n: &'a FiniteStructure,
    nn: usize,
    base: usize,
    k: usize,
}

impl Game<'_> {
    fn split(&self, p: usize) -> (usize, usize) {
        (p / self.nn, p % self.nn)
    }

    fn code(&self, sorted: &[usize]) -> usize {
        let mut code = 0;
        let mut mult = 1;
        for &p in sorted {
            code += (p + 1) * mult;
            mult *= self.base;
        }
        code
    }

    fn is_iso(&self, set: &[usize]) -> bool {
        let pts: Vec<(usize, usize)> = set.iter().map(|&p| self.split(p)).collect();
        for (i, &(a, b)) in pts.iter().enumerate() {
            for &(c, d) in &pts[..i] {
                if (a == c) != (b == d) {
                    return false;
                }
            }
        }
        let dom: Vec<usize> = pts.iter().map(|p| p.0).collect();
        let img: Vec<usize> = pts.iter().map(|p| p.1).collect();
        let mut args_m = Vec::new();
        let mut args_n = Vec::new();
        for (rel, (_, arity)) in self.m.signature().relations().iter().enumerate() {
            let ok = crate::structure::for_each_index_tuple(pts.len(), *arity, |idx| {
                args_m.clear();
                args_n.clear();
                args_m.extend(idx.iter().map(|&i| dom[i]));
                args_n.extend(idx.iter().map(|&i| img[i]));
                self.m.holds(rel, &args_m) == self.n.holds(rel, &args_n)
            });
            if !ok {
                return false;
            }
        }
        true
    }

    fn with(&self, set: &[usize], p: usize) -> usize {
        let mut v = Vec::with_capacity(set.len() + 1);
        v.extend_from_slice(set);
        let pos = v.partition_point(|&q| q < p);
        v.insert(pos, p);
        self.code(&v)
    }

    fn survives(&self, set: &[usize], alive: &[bool]) -> bool {
        // restrictions
        for skip in 0..set.len() {
            let sub: Vec<usize> = set.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &p)| p).collect();
            if !alive[self.code(&sub)] {
                return false;
            }
        }
        if set.len() >= self.k {
            return true;
        }
        let pts: Vec<(usize, usize)> = set.iter().map(|&p| self.split(p)).collect();
        // forth
        for a in self.m.universe() {
            if pts.iter().any(|&(x, _)| x == a) {
                continue;
            }
            let ok = self
                .n
                .universe()
                .filter(|&b| pts.iter().all(|&(_, y)| y != b))
                .any(|b| alive[self.with(set, a * self.nn + b)]);
            if !ok {
                return false;
            }
        }
        // back
        for b in self.n.universe() {
            if pts.iter().any(|&(_, y)| y == b) {
                continue;
            }
            let ok = self
                .m
                .universe()
                .filter(|&a| pts.iter().all(|&(x, _)| x != a))
                .any(|a| alive[self.with(set, a * self.nn + b)]);
            if !ok {
                return false;
            }
        }
        true
    }
}

fn enumerate(pairs: usize, k: usize, start: usize, stack: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    f(stack);
    if stack.len() == k {
        return;
    }
    for p in start..pairs {
        stack.push(p);
        enumerate(pairs, k, p + 1, stack, f);
        stack.pop();
    }
}
