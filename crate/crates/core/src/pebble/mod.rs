//! `≡^k` by partition refinement of k-tuple spaces.
//!
//! The initial color of a k-tuple is its complete quantifier-free type. A
//! round replaces the color of `ā` by the pair (old color, for each position
//! `i` the *set* of old colors of `ā[i ↦ m]` over the tuple's own universe).
//! Sets rather than multisets keep the relation at `L^k` instead of the
//! counting logic `C^k`. Colors are renumbered every round by sorting the
//! signatures, which gives an ordering that depends only on the realized
//! types and not on element names.

mod diag;
mod game;

pub use diag::{extract_diag_k, extract_diag_k_joint, DiagK};
pub use game::{pebble_game_equivalent, pebble_game_equivalent_capped, DEFAULT_POSITION_CAP};

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::structure::{encode, FiniteStructure};

/// Soft cap on the total number of k-tuples refined in one run.
pub const DEFAULT_TUPLE_CAP: u128 = 1 << 22;

const LABELS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

#[derive(Debug, Clone, Copy)]
pub struct RefineOptions {
    pub exec: Exec,
    /// Maximum total tuple count; `None` lifts the cap.
    pub tuple_cap: Option<u128>,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            exec: Exec::default(),
            tuple_cap: Some(DEFAULT_TUPLE_CAP),
        }
    }
}

/// Stable coloring of the k-tuple spaces of one or more structures.
#[derive(Debug, Clone)]
pub struct KTypePartition {
    k: usize,
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    coloring: Vec<u32>,
    traces: Vec<String>,
    qf: Vec<String>,
    rounds: usize,
}

impl KTypePartition {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn structure_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn size_of(&self, structure: usize) -> usize {
        self.sizes[structure]
    }

    pub fn class_count(&self) -> usize {
        self.traces.len()
    }

    /// Number of refinement rounds run, including the one that confirmed
    /// stability.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Color of a k-tuple of structure `structure`.
    pub fn color(&self, structure: usize, tuple: &[usize]) -> u32 {
        debug_assert_eq!(tuple.len(), self.k);
        self.coloring[self.offsets[structure] + encode(tuple, self.sizes[structure])]
    }

    /// Color of a tuple of length `1..=k`, padded by repeating its last entry.
    pub fn padded_color(&self, structure: usize, tuple: &[usize]) -> u32 {
        self.color(structure, &pad(tuple, self.k))
    }

    /// Colors of all k-tuples of `structure`, indexed by the base-n encoding.
    pub fn colors_of(&self, structure: usize) -> &[u32] {
        let start = self.offsets[structure];
        let len = self.sizes[structure].pow(self.k as u32);
        &self.coloring[start..start + len]
    }

    pub fn realized(&self, structure: usize) -> BTreeSet<u32> {
        self.colors_of(structure).iter().copied().collect()
    }

    /// Canonical refinement trace of a class.
    pub fn trace(&self, class: u32) -> &str {
        &self.traces[class as usize]
    }

    /// First 16 hex digits of the SHA-256 of the class trace.
    pub fn trace_hash(&self, class: u32) -> String {
        let digest = Sha256::digest(self.traces[class as usize].as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Quantifier-free type token of a class (its round-0 color).
    pub fn qf_token(&self, class: u32) -> &str {
        &self.qf[class as usize]
    }

    /// Partition dump for one structure: `class <id> <trace-hash>` lines for
    /// the classes it realizes, then `tuple <e1> ... <ek> <id>` lines.
    pub fn dump(&self, structure: usize) -> String {
        let mut out = String::new();
        for class in self.realized(structure) {
            let _ = writeln!(out, "class {class} {}", self.trace_hash(class));
        }
        let n = self.sizes[structure];
        for (idx, &c) in self.colors_of(structure).iter().enumerate() {
            out.push_str("tuple");
            for e in decode(idx, n, self.k) {
                let _ = write!(out, " {e}");
            }
            let _ = writeln!(out, " {c}");
        }
        out
    }

    /// Runs one more round and reports whether any class would split.
    pub fn is_stable(&self) -> bool {
        let sigs = round_signatures(&self.sizes, &self.offsets, self.k, &self.coloring, Exec::Sequential);
        let mut by_color: HashMap<u32, &Vec<u32>> = HashMap::new();
        for (c, s) in self.coloring.iter().zip(&sigs) {
            if let Some(prev) = by_color.insert(*c, s) {
                if prev != s {
                    return false;
                }
            }
        }
        true
    }
}

pub fn refine_k_types(m: &FiniteStructure, k: usize) -> Result<KTypePartition> {
    refine_joint(&[m], k, RefineOptions::default())
}

pub fn joint_k_types(m: &FiniteStructure, n: &FiniteStructure, k: usize) -> Result<KTypePartition> {
    refine_joint(&[m, n], k, RefineOptions::default())
}

/// Whether `m ≡^k n`: the stable color sets realized by the two tuple
/// spaces under a joint run coincide.
pub fn k_equivalent(m: &FiniteStructure, n: &FiniteStructure, k: usize) -> Result<bool> {
    let p = joint_k_types(m, n, k)?;
    Ok(p.realized(0) == p.realized(1))
}

/// One refinement run over the disjoint union of the tuple spaces of
/// `structures`; substitutions stay inside each tuple's own structure.
pub fn refine_joint(structures: &[&FiniteStructure], k: usize, opts: RefineOptions) -> Result<KTypePartition> {
    let Some(first) = structures.first() else {
        return Err(Error::EmptySet);
    };
    let sig = first.signature();
    if let Some(other) = structures.iter().find(|s| s.signature() != sig) {
        return Err(Error::SignatureMismatch(format!(
            "{:?} vs {:?}",
            sig.relations(),
            other.signature().relations()
        )));
    }
    if k == 0 || k < sig.max_arity() {
        return Err(Error::KBelowArity {
            k,
            arity: sig.max_arity().max(1),
        });
    }
    if k > LABELS.len() {
        return Err(Error::KBelowArity { k, arity: LABELS.len() });
    }
    let total: u128 = structures.iter().map(|s| (s.size() as u128).pow(k as u32)).sum();
    if let Some(cap) = opts.tuple_cap {
        if total > cap {
            return Err(Error::TupleSpaceCap { tuples: total, cap });
        }
    }
    let sizes: Vec<usize> = structures.iter().map(|s| s.size()).collect();
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut acc = 0usize;
    for &n in &sizes {
        offsets.push(acc);
        acc += n.pow(k as u32);
    }
    let owner = |global: usize| -> usize { offsets.partition_point(|&o| o <= global) - 1 };

    // round 0: quantifier-free types
    let tokens: Vec<String> = opts.exec.map_range(acc, |g| {
        let s = owner(g);
        let tuple = decode(g - offsets[s], sizes[s], k);
        qf_token(structures[s], &tuple)
    });
    let mut distinct: Vec<&String> = tokens.iter().collect();
    distinct.sort();
    distinct.dedup();
    let ids: HashMap<&String, u32> = distinct.iter().enumerate().map(|(i, t)| (*t, i as u32)).collect();
    let mut coloring: Vec<u32> = tokens.iter().map(|t| ids[t]).collect();
    let mut traces: Vec<String> = distinct.iter().map(|t| (*t).clone()).collect();
    let mut qf: Vec<String> = traces.clone();
    let mut rounds = 0;

    loop {
        rounds += 1;
        let sigs = round_signatures(&sizes, &offsets, k, &coloring, opts.exec);
        let mut keys: Vec<&Vec<u32>> = sigs.iter().collect();
        keys.sort();
        keys.dedup();
        if keys.len() == traces.len() {
            break;
        }
        let new_ids: HashMap<&Vec<u32>, u32> = keys.iter().enumerate().map(|(i, s)| (*s, i as u32)).collect();
        let new_traces: Vec<String> = keys
            .iter()
            .map(|sig| format!("{}|{}", traces[sig[0] as usize], sig_string(sig)))
            .collect();
        let new_qf: Vec<String> = keys.iter().map(|sig| qf[sig[0] as usize].clone()).collect();
        coloring = sigs.iter().map(|s| new_ids[s]).collect();
        traces = new_traces;
        qf = new_qf;
    }

    Ok(KTypePartition {
        k,
        sizes,
        offsets,
        coloring,
        traces,
        qf,
        rounds,
    })
}

/// Signature of every tuple for one round: `[color, len_0, set_0.., len_1, set_1.., ...]`.
fn round_signatures(sizes: &[usize], offsets: &[usize], k: usize, coloring: &[u32], exec: Exec) -> Vec<Vec<u32>> {
    let owner = |global: usize| -> usize { offsets.partition_point(|&o| o <= global) - 1 };
    exec.map_range(coloring.len(), |g| {
        let s = owner(g);
        let n = sizes[s];
        let local = g - offsets[s];
        let base = offsets[s];
        let mut sig = Vec::with_capacity(1 + k * (n + 1));
        sig.push(coloring[g]);
        let mut set = Vec::with_capacity(n);
        let mut stride = 1usize;
        let mut strides = vec![0usize; k];
        for i in (0..k).rev() {
            strides[i] = stride;
            stride *= n;
        }
        for &stride in &strides {
            let digit = (local / stride) % n;
            let zeroed = local - digit * stride;
            set.clear();
            for m in 0..n {
                set.push(coloring[base + zeroed + m * stride]);
            }
            set.sort_unstable();
            set.dedup();
            sig.push(set.len() as u32);
            sig.extend_from_slice(&set);
        }
        sig
    })
}

fn sig_string(sig: &[u32]) -> String {
    let mut out = String::new();
    let mut i = 1;
    while i < sig.len() {
        let len = sig[i] as usize;
        out.push('{');
        for (j, c) in sig[i + 1..i + 1 + len].iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{c}");
        }
        out.push('}');
        i += 1 + len;
    }
    out
}

/// Complete quantifier-free type of a tuple, serialized as the equality
/// pattern followed by one bit string per relation in declaration order.
/// Bit `j` of relation `R` of arity `r` is `R(a_f)` for the `j`-th map
/// `f: [r] -> [k]` in lexicographic order.
pub fn qf_token(m: &FiniteStructure, tuple: &[usize]) -> String {
    let k = tuple.len();
    let mut out = String::with_capacity(k + 1 + m.signature().len() * (k * k + 1));
    for i in 0..k {
        let first = tuple.iter().position(|&e| e == tuple[i]).expect("present");
        // label by the number of distinct values seen before the first occurrence
        let label = tuple[..first]
            .iter()
            .enumerate()
            .filter(|(j, &e)| tuple[..*j].iter().all(|&p| p != e))
            .count();
        out.push(LABELS[label] as char);
    }
    let mut args = Vec::new();
    for (rel, (_, arity)) in m.signature().relations().iter().enumerate() {
        out.push('/');
        crate::structure::for_each_index_tuple(k, *arity, |f| {
            args.clear();
            args.extend(f.iter().map(|&i| tuple[i]));
            out.push(if m.holds(rel, &args) { '1' } else { '0' });
            true
        });
    }
    out
}

/// Equality pattern encoded in a qf token: position `i` is labeled by the
/// index of its value among the distinct values in order of appearance.
pub fn token_pattern(token: &str) -> Vec<usize> {
    token
        .split('/')
        .next()
        .unwrap_or("")
        .bytes()
        .map(|b| LABELS.iter().position(|&l| l == b).unwrap_or(0))
        .collect()
}

pub(crate) fn pad(tuple: &[usize], k: usize) -> Vec<usize> {
    assert!(!tuple.is_empty() && tuple.len() <= k, "pad needs 1..=k entries");
    let mut out = tuple.to_vec();
    let last = *tuple.last().expect("nonempty");
    out.resize(k, last);
    out
}

pub(crate) fn decode(mut idx: usize, n: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = idx % n;
        idx /= n;
    }
    out
}
