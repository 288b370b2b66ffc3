//! Finite stand-in for algebraic closure: an element is added once the
//! k-variable type it realizes over the current set has few realizations.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::pebble::{refine_k_types, KTypePartition};
use crate::structure::{for_each_index_tuple, FiniteStructure};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureMode {
    Trivial,
    KTypeCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosureConfig {
    pub mode: ClosureMode,
    pub k: usize,
    pub threshold: usize,
}

impl ClosureConfig {
    pub fn trivial() -> Self {
        ClosureConfig {
            mode: ClosureMode::Trivial,
            k: 2,
            threshold: 1,
        }
    }

    pub fn k_type_count(k: usize, threshold: usize) -> Result<Self> {
        if threshold == 0 {
            return Err(Error::Program("closure threshold must be at least 1".into()));
        }
        Ok(ClosureConfig {
            mode: ClosureMode::KTypeCount,
            k,
            threshold,
        })
    }
}

impl Default for ClosureConfig {
    fn default() -> Self {
        ClosureConfig::trivial()
    }
}

/// A closure operator bound to one structure, with its k-type coloring
/// computed once.
#[derive(Debug, Clone)]
pub struct ClosureOperator {
    cfg: ClosureConfig,
    size: usize,
    types: Option<KTypePartition>,
}

impl ClosureOperator {
    pub fn new(m: &FiniteStructure, cfg: ClosureConfig) -> Result<Self> {
        if cfg.threshold == 0 {
            return Err(Error::Program("closure threshold must be at least 1".into()));
        }
        let types = match cfg.mode {
            ClosureMode::Trivial => None,
            ClosureMode::KTypeCount => Some(refine_k_types(m, cfg.k)?),
        };
        Ok(ClosureOperator {
            cfg,
            size: m.size(),
            types,
        })
    }

    pub fn config(&self) -> ClosureConfig {
        self.cfg
    }

    pub fn close(&self, b: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
        if let Some(&elem) = b.iter().find(|&&e| e >= self.size) {
            return Err(Error::OutOfRange { elem, size: self.size });
        }
        let Some(types) = &self.types else {
            return Ok(b.clone());
        };
        let k = types.k();
        let mut current = b.clone();
        loop {
            let params: Vec<usize> = current.iter().copied().collect();
            let profiles: Vec<Vec<u32>> = (0..self.size).map(|a| profile(types, a, &params, k)).collect();
            let mut counts: HashMap<&Vec<u32>, usize> = HashMap::new();
            for p in &profiles {
                *counts.entry(p).or_default() += 1;
            }
            let next: BTreeSet<usize> = (0..self.size)
                .filter(|&a| current.contains(&a) || counts[&profiles[a]] <= self.cfg.threshold)
                .collect();
            if next == current {
                return Ok(current);
            }
            current = next;
        }
    }
}

/// Colors of `(a, b̄)` for every tuple `b̄` of length `0..k` over `params`,
/// in a fixed enumeration order.
fn profile(types: &KTypePartition, a: usize, params: &[usize], k: usize) -> Vec<u32> {
    let mut out = vec![types.padded_color(0, &[a])];
    let mut tuple = Vec::with_capacity(k);
    for len in 1..k {
        for_each_index_tuple(params.len(), len, |idx| {
            tuple.clear();
            tuple.push(a);
            tuple.extend(idx.iter().map(|&i| params[i]));
            out.push(types.padded_color(0, &tuple));
            true
        });
    }
    out
}

pub fn k_closure(m: &FiniteStructure, b: &BTreeSet<usize>, cfg: ClosureConfig) -> Result<BTreeSet<usize>> {
    ClosureOperator::new(m, cfg)?.close(b)
}
