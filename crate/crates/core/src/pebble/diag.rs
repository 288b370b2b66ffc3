use std::collections::{BTreeMap, BTreeSet};

use super::{refine_joint, KTypePartition, RefineOptions};
use crate::error::{Error, Result};
use crate::structure::{all_tuples, FiniteStructure};

/// The k-variable diagram of a base set: the class of every k-tuple over the
/// base (which covers every shorter tuple through padding), plus the set of
/// classes the ambient structure realizes.
///
/// Tuples are keyed by positions in the sorted base, so two diagrams over
/// different bases compare as diagrams of the order-preserving bijection
/// between them. Class ids are only comparable between diagrams taken from
/// the same refinement run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagK {
    k: usize,
    base: Vec<usize>,
    types: BTreeMap<Vec<usize>, u32>,
    theory: BTreeSet<u32>,
}

impl DiagK {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn base(&self) -> &[usize] {
        &self.base
    }

    pub fn theory(&self) -> &BTreeSet<u32> {
        &self.theory
    }

    /// Class of a tuple of base elements of length `1..=k` (padded).
    pub fn type_of(&self, elems: &[usize]) -> Option<u32> {
        let idx: Option<Vec<usize>> = elems.iter().map(|e| self.base.binary_search(e).ok()).collect();
        let idx = idx?;
        if idx.is_empty() || idx.len() > self.k {
            return None;
        }
        self.types.get(&super::pad(&idx, self.k)).copied()
    }

    /// Same diagram up to renaming the base order-preservingly.
    pub fn same_diagram(&self, other: &DiagK) -> bool {
        self.k == other.k && self.base.len() == other.base.len() && self.types == other.types && self.theory == other.theory
    }
}

pub fn extract_diag_k(m: &FiniteStructure, base: &BTreeSet<usize>, k: usize) -> Result<DiagK> {
    let p = refine_joint(&[m], k, RefineOptions::default())?;
    from_partition(&p, 0, base)
}

/// Diagrams of `a` in `m` and `b` in `n`, colored by one joint run so that
/// they can be compared.
pub fn extract_diag_k_joint(
    m: &FiniteStructure,
    a: &BTreeSet<usize>,
    n: &FiniteStructure,
    b: &BTreeSet<usize>,
    k: usize,
) -> Result<(DiagK, DiagK)> {
    let p = refine_joint(&[m, n], k, RefineOptions::default())?;
    Ok((from_partition(&p, 0, a)?, from_partition(&p, 1, b)?))
}

pub(crate) fn from_partition(p: &KTypePartition, structure: usize, base: &BTreeSet<usize>) -> Result<DiagK> {
    if base.is_empty() {
        return Err(Error::EmptySet);
    }
    let size = p.size_of(structure);
    if let Some(&e) = base.iter().find(|&&e| e >= size) {
        return Err(Error::OutOfRange { elem: e, size });
    }
    let elems: Vec<usize> = base.iter().copied().collect();
    let mut types = BTreeMap::new();
    for idx in all_tuples(elems.len(), p.k()) {
        let tuple: Vec<usize> = idx.iter().map(|&i| elems[i]).collect();
        types.insert(idx, p.color(structure, &tuple));
    }
    Ok(DiagK {
        k: p.k(),
        base: elems,
        types,
        theory: p.realized(structure),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antipodal_and_adjacent_pairs_of_c6_differ() {
        let c6 = FiniteStructure::directed_cycle(6).unwrap();
        let anti = extract_diag_k(&c6, &BTreeSet::from([0, 3]), 2).unwrap();
        let adj = extract_diag_k(&c6, &BTreeSet::from([0, 1]), 2).unwrap();
        assert!(!anti.same_diagram(&adj));
        let adj2 = extract_diag_k(&c6, &BTreeSet::from([2, 3]), 2).unwrap();
        assert!(adj.same_diagram(&adj2));
    }

    #[test]
    fn single_generator_records_its_padded_tuple() {
        let c3 = FiniteStructure::directed_cycle(3).unwrap();
        let d = extract_diag_k(&c3, &BTreeSet::from([1]), 3).unwrap();
        assert_eq!(d.types.len(), 1);
        assert!(d.type_of(&[1]).is_some());
        assert_eq!(d.type_of(&[1]), d.type_of(&[1, 1, 1]));
        assert_eq!(d.type_of(&[0]), None);
    }

    #[test]
    fn empty_base_is_rejected() {
        let c3 = FiniteStructure::directed_cycle(3).unwrap();
        assert_eq!(extract_diag_k(&c3, &BTreeSet::new(), 2), Err(Error::EmptySet));
    }

    #[test]
    fn joint_diagrams_compare_across_structures() {
        let c5 = FiniteStructure::directed_cycle(5).unwrap();
        let r = c5.relabel(&[1, 2, 3, 4, 0]).unwrap();
        // relabeling sends 0 -> 1 and 1 -> 2
        let (d0, d1) = extract_diag_k_joint(&c5, &BTreeSet::from([0, 1]), &r, &BTreeSet::from([1, 2]), 2).unwrap();
        assert!(d0.same_diagram(&d1));
        let (d0, d1) = extract_diag_k_joint(&c5, &BTreeSet::from([0, 1]), &r, &BTreeSet::from([1, 3]), 2).unwrap();
        assert!(!d0.same_diagram(&d1));
    }
}
