//! Deterministic structure corpora.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::structure::FiniteStructure;

pub const EXHAUSTIVE_CAP: usize = 5;
pub const RANDOM_CAP: usize = 8;

/// Every loopless digraph on `0..n`, ordered by the bitmask over
/// off-diagonal pairs in lexicographic order.
pub fn all_digraphs(n: usize) -> Result<Vec<FiniteStructure>> {
    if n > EXHAUSTIVE_CAP {
        return Err(Error::CorpusCap { n, cap: EXHAUSTIVE_CAP });
    }
    if n == 0 {
        return Err(Error::EmptySet);
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    (0u64..1 << pairs.len())
        .map(|mask| {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &p)| p)
                .collect();
            FiniteStructure::digraph(n, &edges)
        })
        .collect()
}

/// All loopless digraphs on `1..=max_n` vertices.
pub fn all_digraphs_up_to(max_n: usize) -> Result<Vec<FiniteStructure>> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        out.extend(all_digraphs(n)?);
    }
    Ok(out)
}

/// One random digraph, loops allowed, each pair present with probability `p`.
pub fn random_digraph(n: usize, p: f64, rng: &mut impl Rng) -> Result<FiniteStructure> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    FiniteStructure::digraph(n, &edges)
}

/// `count` seeded random digraphs with sizes in `1..=max_n` and a density
/// drawn per structure.
pub fn random_structures(seed: u64, count: usize, max_n: usize) -> Result<Vec<FiniteStructure>> {
    if max_n > RANDOM_CAP {
        return Err(Error::CorpusCap { n: max_n, cap: RANDOM_CAP });
    }
    if max_n == 0 {
        return Err(Error::EmptySet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=max_n);
            let p = rng.gen_range(0.1..0.7);
            random_digraph(n, p, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(all_digraphs(1).unwrap().len(), 1);
        assert_eq!(all_digraphs(2).unwrap().len(), 4);
        assert_eq!(all_digraphs(3).unwrap().len(), 64);
        assert!(matches!(all_digraphs(6), Err(Error::CorpusCap { .. })));
        assert!(matches!(random_structures(1, 1, 9), Err(Error::CorpusCap { .. })));
    }

    #[test]
    fn seeded_is_deterministic() {
        assert_eq!(random_structures(7, 20, 6).unwrap(), random_structures(7, 20, 6).unwrap());
        assert_ne!(random_structures(7, 20, 6).unwrap(), random_structures(8, 20, 6).unwrap());
    }
}
