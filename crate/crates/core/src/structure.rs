//! Finite relational structures over the universe `0..n`.
//!
//! The text format is line oriented: `rel <name> <arity>` headers in
//! declaration order, one `universe <n>` line, then fact lines
//! `<name> <e1> ... <er>`. `#` starts a comment. Serialization emits facts
//! in declaration order of their relation and lexicographic tuple order, so
//! the output is byte-stable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{parse_err, Error, Result};

/// Tables up to this many cells are kept as dense bit vectors for lookup.
const DENSE_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    relations: Vec<(String, usize)>,
}

impl Signature {
    pub fn new(relations: Vec<(String, usize)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (name, arity) in &relations {
            if *arity == 0 {
                return Err(Error::InvalidSignature(format!("`{name}` has arity 0")));
            }
            if !is_identifier(name) {
                return Err(Error::InvalidSignature(format!("`{name}` is not an identifier")));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidSignature(format!("duplicate relation `{name}`")));
            }
        }
        Ok(Signature { relations })
    }

    /// Signature with a single binary relation `E`.
    pub fn digraph() -> Self {
        Signature {
            relations: vec![("E".to_string(), 2)],
        }
    }

    pub fn empty() -> Self {
        Signature { relations: Vec::new() }
    }

    pub fn relations(&self) -> &[(String, usize)] {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|(n, _)| n == name)
    }

    pub fn name(&self, rel: usize) -> &str {
        &self.relations[rel].0
    }

    pub fn arity(&self, rel: usize) -> usize {
        self.relations[rel].1
    }

    pub fn max_arity(&self) -> usize {
        self.relations.iter().map(|(_, a)| *a).max().unwrap_or(0)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

/// A finite relational structure with universe `0..size`.
#[derive(Debug, Clone)]
pub struct FiniteStructure {
    signature: Signature,
    size: usize,
    facts: Vec<BTreeSet<Vec<usize>>>,
    dense: Vec<Option<Vec<bool>>>,
}

impl PartialEq for FiniteStructure {
    fn eq(&self, other: &Self) -> bool {
        self.signature == other.signature && self.size == other.size && self.facts == other.facts
    }
}

impl Eq for FiniteStructure {}

impl FiniteStructure {
    pub fn new(signature: Signature, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptySet);
        }
        let dense = signature
            .relations()
            .iter()
            .map(|(_, arity)| {
                size.checked_pow(*arity as u32)
                    .filter(|cells| *cells <= DENSE_LIMIT)
                    .map(|cells| vec![false; cells])
            })
            .collect();
        let facts = vec![BTreeSet::new(); signature.len()];
        Ok(FiniteStructure {
            signature,
            size,
            facts,
            dense,
        })
    }

    /// Digraph on `size` vertices with the given edges.
    pub fn digraph(size: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut s = FiniteStructure::new(Signature::digraph(), size)?;
        for &(a, b) in edges {
            s.insert(0, vec![a, b])?;
        }
        Ok(s)
    }

    /// Directed cycle `0 -> 1 -> ... -> n-1 -> 0`.
    pub fn directed_cycle(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        FiniteStructure::digraph(n, &edges)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn universe(&self) -> std::ops::Range<usize> {
        0..self.size
    }

    pub fn facts(&self, rel: usize) -> &BTreeSet<Vec<usize>> {
        &self.facts[rel]
    }

    pub fn fact_count(&self) -> usize {
        self.facts.iter().map(|f| f.len()).sum()
    }

    pub fn add_fact(&mut self, name: &str, tuple: Vec<usize>) -> Result<()> {
        let rel = self
            .signature
            .index_of(name)
            .ok_or_else(|| Error::UnknownRelation(name.to_string()))?;
        self.insert(rel, tuple)
    }

    pub fn insert(&mut self, rel: usize, tuple: Vec<usize>) -> Result<()> {
        let arity = self.signature.arity(rel);
        if tuple.len() != arity {
            return Err(Error::ArityMismatch {
                rel: self.signature.name(rel).to_string(),
                expected: arity,
                got: tuple.len(),
            });
        }
        if let Some(&elem) = tuple.iter().find(|&&e| e >= self.size) {
            return Err(Error::OutOfRange {
                elem,
                size: self.size,
            });
        }
        if let Some(table) = &mut self.dense[rel] {
            table[encode(&tuple, self.size)] = true;
        }
        self.facts[rel].insert(tuple);
        Ok(())
    }

    pub fn remove(&mut self, rel: usize, tuple: &[usize]) -> bool {
        if let Some(table) = &mut self.dense[rel] {
            if tuple.len() == self.signature.arity(rel) && tuple.iter().all(|&e| e < self.size) {
                table[encode(tuple, self.size)] = false;
            }
        }
        self.facts[rel].remove(tuple)
    }

    /// Whether `rel(tuple)` holds. Tuples of the wrong length never hold.
    #[inline]
    pub fn holds(&self, rel: usize, tuple: &[usize]) -> bool {
        match &self.dense[rel] {
            Some(table) => {
                tuple.len() == self.signature.arity(rel)
                    && tuple.iter().all(|&e| e < self.size)
                    && table[encode(tuple, self.size)]
            }
            None => self.facts[rel].contains(tuple),
        }
    }

    /// Parses the structure text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rels: Vec<(String, usize)> = Vec::new();
        let mut structure: Option<FiniteStructure> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw);
            let mut words = line.split_whitespace();
            let Some(head) = words.next() else { continue };
            let rest: Vec<&str> = words.collect();
            match (head, &structure) {
                ("rel", None) => {
                    let [name, arity] = rest.as_slice() else {
                        return Err(parse_err(line_no, "expected `rel <name> <arity>`"));
                    };
                    let arity: usize = arity
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad arity `{arity}`")))?;
                    rels.push((name.to_string(), arity));
                }
                ("rel", Some(_)) => {
                    return Err(parse_err(line_no, "`rel` after `universe`"));
                }
                ("universe", None) => {
                    let [n] = rest.as_slice() else {
                        return Err(parse_err(line_no, "expected `universe <n>`"));
                    };
                    let n: usize = n
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad universe size `{n}`")))?;
                    let sig = Signature::new(std::mem::take(&mut rels))
                        .map_err(|e| parse_err(line_no, e.to_string()))?;
                    structure = Some(
                        FiniteStructure::new(sig, n).map_err(|e| parse_err(line_no, e.to_string()))?,
                    );
                }
                ("universe", Some(_)) => {
                    return Err(parse_err(line_no, "duplicate `universe` line"));
                }
                (_, None) => {
                    return Err(parse_err(line_no, format!("fact `{head}` before `universe`")));
                }
                (name, Some(_)) => {
                    let tuple = rest
                        .iter()
                        .map(|w| {
                            w.parse::<usize>()
                                .map_err(|_| parse_err(line_no, format!("bad element `{w}`")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let s = structure.as_mut().expect("matched Some");
                    s.add_fact(name, tuple)
                        .map_err(|e| parse_err(line_no, e.to_string()))?;
                }
            }
        }
        structure.ok_or_else(|| parse_err(text.lines().count().max(1), "missing `universe` line"))
    }

    /// Substructure induced on `elems`, relabeled order-preservingly to
    /// `0..|elems|`. Returns the structure and the map new label -> old element.
    pub fn induced_substructure(&self, elems: &BTreeSet<usize>) -> Result<(FiniteStructure, Vec<usize>)> {
        if elems.is_empty() {
            return Err(Error::EmptySet);
        }
        if let Some(&elem) = elems.iter().find(|&&e| e >= self.size) {
            return Err(Error::OutOfRange {
                elem,
                size: self.size,
            });
        }
        let old: Vec<usize> = elems.iter().copied().collect();
        let new_of: BTreeMap<usize, usize> = old.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut sub = FiniteStructure::new(self.signature.clone(), old.len())?;
        for (rel, facts) in self.facts.iter().enumerate() {
            for t in facts {
                if let Some(mapped) = t.iter().map(|e| new_of.get(e).copied()).collect::<Option<Vec<_>>>() {
                    sub.insert(rel, mapped)?;
                }
            }
        }
        Ok((sub, old))
    }

    /// Image of this structure under the bijection `perm` (old element -> new element).
    pub fn relabel(&self, perm: &[usize]) -> Result<FiniteStructure> {
        if perm.len() != self.size {
            return Err(Error::NotInjective(format!(
                "relabeling has {} entries for a universe of size {}",
                perm.len(),
                self.size
            )));
        }
        let distinct: BTreeSet<_> = perm.iter().collect();
        if distinct.len() != perm.len() || perm.iter().any(|&p| p >= self.size) {
            return Err(Error::NotInjective("relabeling is not a permutation".into()));
        }
        let mut out = FiniteStructure::new(self.signature.clone(), self.size)?;
        for (rel, facts) in self.facts.iter().enumerate() {
            for t in facts {
                out.insert(rel, t.iter().map(|&e| perm[e]).collect())?;
            }
        }
        Ok(out)
    }

    /// Disjoint union, with `other` shifted past this universe.
    pub fn disjoint_union(&self, other: &FiniteStructure) -> Result<FiniteStructure> {
        if self.signature != other.signature {
            return Err(Error::SignatureMismatch("disjoint union".into()));
        }
        let mut out = FiniteStructure::new(self.signature.clone(), self.size + other.size)?;
        for rel in 0..self.signature.len() {
            for t in &self.facts[rel] {
                out.insert(rel, t.clone())?;
            }
            for t in &other.facts[rel] {
                out.insert(rel, t.iter().map(|e| e + self.size).collect())?;
            }
        }
        Ok(out)
    }
}

impl fmt::Display for FiniteStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, arity) in self.signature.relations() {
            writeln!(f, "rel {name} {arity}")?;
        }
        writeln!(f, "universe {}", self.size)?;
        for (rel, facts) in self.facts.iter().enumerate() {
            let name = self.signature.name(rel);
            for t in facts {
                write!(f, "{name}")?;
                for e in t {
                    write!(f, " {e}")?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

#[inline]
pub(crate) fn encode(tuple: &[usize], base: usize) -> usize {
    tuple.iter().fold(0, |acc, &e| acc * base + e)
}

/// A finite partial injection between universes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PartialMap {
    pairs: Vec<(usize, usize)>,
}

impl PartialMap {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut pairs: Vec<_> = pairs.into_iter().collect();
        pairs.sort_unstable();
        pairs.dedup();
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::NotInjective(format!("{} has two images", w[0].0)));
            }
        }
        let targets: BTreeSet<_> = pairs.iter().map(|p| p.1).collect();
        if targets.len() != pairs.len() {
            return Err(Error::NotInjective("two sources share an image".into()));
        }
        Ok(PartialMap { pairs })
    }

    pub fn identity(elems: impl IntoIterator<Item = usize>) -> Self {
        PartialMap {
            pairs: elems.into_iter().map(|e| (e, e)).collect::<BTreeSet<_>>().into_iter().collect(),
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, src: usize) -> Option<usize> {
        self.pairs
            .binary_search_by_key(&src, |p| p.0)
            .ok()
            .map(|i| self.pairs[i].1)
    }

    pub fn domain(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn inverse(&self) -> PartialMap {
        let mut pairs: Vec<_> = self.pairs.iter().map(|&(a, b)| (b, a)).collect();
        pairs.sort_unstable();
        PartialMap { pairs }
    }
}

/// Whether `f` is a partial isomorphism from `m` to `n`: every relation
/// holds on a tuple over `dom(f)` exactly when it holds on the image.
pub fn is_partial_iso(m: &FiniteStructure, n: &FiniteStructure, f: &PartialMap) -> Result<bool> {
    if m.signature() != n.signature() {
        return Err(Error::SignatureMismatch("partial isomorphism check".into()));
    }
    for &(a, b) in f.pairs() {
        if a >= m.size() {
            return Err(Error::OutOfRange { elem: a, size: m.size() });
        }
        if b >= n.size() {
            return Err(Error::OutOfRange { elem: b, size: n.size() });
        }
    }
    let dom = f.domain();
    let img: Vec<usize> = f.pairs().iter().map(|p| p.1).collect();
    for rel in 0..m.signature().len() {
        let arity = m.signature().arity(rel);
        let ok = for_each_index_tuple(dom.len(), arity, |idx| {
            let src: Vec<usize> = idx.iter().map(|&i| dom[i]).collect();
            let dst: Vec<usize> = idx.iter().map(|&i| img[i]).collect();
            m.holds(rel, &src) == n.holds(rel, &dst)
        });
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Calls `f` on every tuple in `0..base` of length `len`, in lexicographic
/// order, until it returns `false`. Returns whether every call returned `true`.
pub(crate) fn for_each_index_tuple(base: usize, len: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    if len == 0 {
        return f(&[]);
    }
    if base == 0 {
        return true;
    }
    let mut idx = vec![0usize; len];
    loop {
        if !f(&idx) {
            return false;
        }
        let mut pos = len;
        loop {
            if pos == 0 {
                return true;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < base {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// All tuples of length `len` over `0..base`, lexicographically.
pub(crate) fn all_tuples(base: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for_each_index_tuple(base, len, |t| {
        out.push(t.to_vec());
        true
    });
    out
}
