//! Directed acyclic graphs, trails, blocking and d-separation.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::error::{parse_err, Error, Result};
use crate::structure::strip_comment;

/// A DAG over opaque vertex ids. Internally vertices are indices in
/// insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    names: Vec<String>,
    index: HashMap<String, usize>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrailKind {
    HeadToTail,
    TailToTail,
    HeadToHead,
}

impl fmt::Display for TrailKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrailKind::HeadToTail => "head-to-tail",
            TrailKind::TailToTail => "tail-to-tail",
            TrailKind::HeadToHead => "head-to-head",
        })
    }
}

impl Dag {
    /// Vertices named `0..n`.
    pub fn with_size(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        Self::from_parts(names, edges)
    }

    pub fn new(vertices: &[&str], edges: &[(&str, &str)]) -> Result<Self> {
        let names: Vec<String> = vertices.iter().map(|v| v.to_string()).collect();
        let index: HashMap<&str, usize> = vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let look = |v: &str| index.get(v).copied().ok_or_else(|| Error::UnknownVertex(v.to_string()));
        let idx: Vec<(usize, usize)> = edges.iter().map(|(a, b)| Ok((look(a)?, look(b)?))).collect::<Result<_>>()?;
        Self::from_parts(names, &idx)
    }

    /// Named vertices with index edges; the workhorse constructor.
    pub fn from_parts(names: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = names.len();
        let mut index = HashMap::with_capacity(n);
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::NotADag(format!("duplicate vertex `{name}`")));
            }
        }
        let mut children = vec![Vec::new(); n];
        let mut parents = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::UnknownVertex(a.max(b).to_string()));
            }
            if a == b {
                return Err(Error::NotADag(format!("self-loop at `{}`", names[a])));
            }
            if !children[a].contains(&b) {
                children[a].push(b);
                parents[b].push(a);
            }
        }
        for v in children.iter_mut().chain(parents.iter_mut()) {
            v.sort_unstable();
        }
        let dag = Dag {
            names,
            index,
            children,
            parents,
        };
        dag.topological_order()?;
        Ok(dag)
    }

    /// Kahn's algorithm; errors on a cycle.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.len();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut out = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            out.push(v);
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if out.len() != n {
            let v = (0..n).find(|&v| indeg[v] > 0).expect("cycle vertex");
            return Err(Error::NotADag(format!("cycle through `{}`", self.names[v])));
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn indices(&self, names: &[&str]) -> Result<BTreeSet<usize>> {
        names.iter().map(|n| self.index_of(n)).collect()
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.children[a].binary_search(&b).is_ok()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, cs) in self.children.iter().enumerate() {
            out.extend(cs.iter().map(|&b| (a, b)));
        }
        out
    }

    fn check(&self, set: &BTreeSet<usize>) -> Result<()> {
        match set.iter().find(|&&v| v >= self.len()) {
            Some(v) => Err(Error::UnknownVertex(v.to_string())),
            None => Ok(()),
        }
    }

    /// `X` together with everything reachable from it.
    pub fn descendants(&self, x: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
        self.check(x)?;
        Ok(self.reach(x, &self.children))
    }

    pub fn ancestors(&self, x: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
        self.check(x)?;
        Ok(self.reach(x, &self.parents))
    }

    fn reach(&self, x: &BTreeSet<usize>, adj: &[Vec<usize>]) -> BTreeSet<usize> {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<usize> = x.iter().copied().collect();
        for &v in &stack {
            seen[v] = true;
        }
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        (0..self.len()).filter(|&v| seen[v]).collect()
    }

    pub fn is_trail(&self, t: &[usize]) -> bool {
        !t.is_empty()
            && t.iter().all(|&v| v < self.len())
            && t.windows(2).all(|w| self.has_edge(w[0], w[1]) || self.has_edge(w[1], w[0]))
    }

    /// Kind of the interior position `i` (0-based, `1 <= i <= len-2`).
    pub fn classify(&self, t: &[usize], i: usize) -> Result<TrailKind> {
        if i == 0 || i + 1 >= t.len() {
            return Err(Error::TrailIndex { index: i, len: t.len() });
        }
        self.require_trail(t)?;
        Ok(self.kind_at(t, i))
    }

    fn require_trail(&self, t: &[usize]) -> Result<()> {
        if self.is_trail(t) {
            Ok(())
        } else {
            let parts: Vec<&str> = t.iter().map(|&v| self.names.get(v).map_or("?", |s| s.as_str())).collect();
            Err(Error::NotATrail(parts.join(",")))
        }
    }

    fn kind_at(&self, t: &[usize], i: usize) -> TrailKind {
        let (p, v, q) = (t[i - 1], t[i], t[i + 1]);
        match (self.has_edge(p, v), self.has_edge(q, v)) {
            (true, true) => TrailKind::HeadToHead,
            (false, false) => TrailKind::TailToTail,
            _ => TrailKind::HeadToTail,
        }
    }

    /// Some interior position blocks: a chain or fork in `Z`, or a collider
    /// with no descendant in `Z`.
    pub fn is_blocked(&self, t: &[usize], z: &BTreeSet<usize>) -> Result<bool> {
        self.check(z)?;
        self.require_trail(t)?;
        Ok((1..t.len().saturating_sub(1)).any(|i| self.blocks_at(t, i, z)))
    }

    fn blocks_at(&self, t: &[usize], i: usize, z: &BTreeSet<usize>) -> bool {
        let v = t[i];
        match self.kind_at(t, i) {
            TrailKind::HeadToHead => self.reach(&BTreeSet::from([v]), &self.children).is_disjoint(z),
            _ => z.contains(&v),
        }
    }

    /// `[X ⊥ Y | Z]` by active-trail reachability over (vertex, direction)
    /// states.
    pub fn d_separated(&self, x: &BTreeSet<usize>, y: &BTreeSet<usize>, z: &BTreeSet<usize>) -> Result<bool> {
        self.check(x)?;
        self.check(y)?;
        self.check(z)?;
        if !x.intersection(y).all(|v| z.contains(v)) {
            return Ok(false);
        }
        let n = self.len();
        let anc = self.reach(z, &self.parents);
        let in_z: Vec<bool> = (0..n).map(|v| z.contains(&v)).collect();
        // state 0: reached from a child (moving up), 1: reached from a parent
        let mut seen = vec![[false; 2]; n];
        let mut queue = VecDeque::new();
        for &s in x.iter().filter(|v| !in_z[**v]) {
            seen[s][0] = true;
            queue.push_back((s, 0usize));
        }
        let mut reached = vec![false; n];
        while let Some((v, dir)) = queue.pop_front() {
            if !in_z[v] {
                reached[v] = true;
            }
            let mut push = |w: usize, d: usize, queue: &mut VecDeque<(usize, usize)>| {
                if !seen[w][d] {
                    seen[w][d] = true;
                    queue.push_back((w, d));
                }
            };
            if dir == 0 {
                if !in_z[v] {
                    for &p in &self.parents[v] {
                        push(p, 0, &mut queue);
                    }
                    for &c in &self.children[v] {
                        push(c, 1, &mut queue);
                    }
                }
            } else {
                if !in_z[v] {
                    for &c in &self.children[v] {
                        push(c, 1, &mut queue);
                    }
                }
                if anc.contains(&v) {
                    for &p in &self.parents[v] {
                        push(p, 0, &mut queue);
                    }
                }
            }
        }
        // Y∖Z is disjoint from X here, so a reached target ends a real trail
        Ok(!y.iter().any(|&v| !in_z[v] && reached[v]))
    }

    /// Exhaustive check: every trail of length at most `2|V|` from `X∖Z` to
    /// `Y∖Z` is blocked. Repeated vertices are allowed.
    pub fn d_separated_by_trails(&self, x: &BTreeSet<usize>, y: &BTreeSet<usize>, z: &BTreeSet<usize>) -> Result<bool> {
        self.check(x)?;
        self.check(y)?;
        self.check(z)?;
        if !x.intersection(y).all(|v| z.contains(v)) {
            return Ok(false);
        }
        let targets: BTreeSet<usize> = y.difference(z).copied().collect();
        let cap = 2 * self.len();
        let mut trail = Vec::with_capacity(cap);
        // (second-to-last, last, length) of prefixes already fully explored;
        // blocking is local, so a prefix's extensions depend on nothing else
        let mut dead = std::collections::HashSet::new();
        for &s in x.difference(z) {
            trail.clear();
            trail.push(s);
            if self.open_trail_from(&mut trail, &targets, z, cap, &mut dead)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn open_trail_from(
        &self,
        trail: &mut Vec<usize>,
        targets: &BTreeSet<usize>,
        z: &BTreeSet<usize>,
        cap: usize,
        dead: &mut std::collections::HashSet<(usize, usize, usize)>,
    ) -> Result<bool> {
        if trail.len() >= cap {
            return Ok(false);
        }
        let v = *trail.last().expect("nonempty");
        let next: Vec<usize> = self.children[v].iter().chain(&self.parents[v]).copied().collect();
        for w in next {
            if dead.contains(&(v, w, trail.len() + 1)) {
                continue;
            }
            trail.push(w);
            // the previous end is now interior
            let blocked = trail.len() >= 3 && self.blocks_at(trail, trail.len() - 2, z);
            if !blocked && (targets.contains(&w) || self.open_trail_from(trail, targets, z, cap, dead)?) {
                return Ok(true);
            }
            trail.pop();
            if !blocked {
                dead.insert((v, w, trail.len() + 1));
            }
        }
        Ok(false)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut pending: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            match words[..] {
                ["node", id] => {
                    if names.iter().any(|n| n == id) {
                        return Err(parse_err(ln, format!("duplicate node `{id}`")));
                    }
                    names.push(id.to_string());
                }
                ["edge", a, b] => pending.push((ln, a.to_string(), b.to_string())),
                _ => return Err(parse_err(ln, format!("unrecognized line `{line}`"))),
            }
        }
        let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut edges = Vec::with_capacity(pending.len());
        for (ln, a, b) in &pending {
            let look = |v: &str| index.get(v).copied().ok_or_else(|| parse_err(*ln, format!("unknown vertex `{v}`")));
            edges.push((look(a)?, look(b)?));
        }
        Self::from_parts(names, &edges)
    }
}

impl fmt::Display for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.names {
            writeln!(f, "node {n}")?;
        }
        for (a, b) in self.edges() {
            writeln!(f, "edge {} {}", self.names[a], self.names[b])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collider() -> Dag {
        Dag::new(&["a", "b", "c"], &[("a", "c"), ("b", "c")]).unwrap()
    }

    fn chain() -> Dag {
        Dag::new(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap()
    }

    fn s(d: &Dag, v: &[&str]) -> BTreeSet<usize> {
        d.indices(v).unwrap()
    }

    #[test]
    fn construction_rejects_cycles_and_loops() {
        assert!(matches!(Dag::with_size(2, &[(0, 1), (1, 0)]), Err(Error::NotADag(_))));
        assert!(matches!(Dag::with_size(1, &[(0, 0)]), Err(Error::NotADag(_))));
        assert!(matches!(Dag::new(&["a"], &[("a", "b")]), Err(Error::UnknownVertex(_))));
    }

    #[test]
    fn descendants_and_kinds() {
        let c = chain();
        assert_eq!(c.descendants(&s(&c, &["a"])).unwrap(), s(&c, &["a", "b", "c"]));
        assert_eq!(c.descendants(&s(&c, &["c"])).unwrap(), s(&c, &["c"]));
        assert_eq!(c.classify(&[0, 1, 2], 1).unwrap(), TrailKind::HeadToTail);
        let k = collider();
        assert_eq!(k.classify(&[0, 2, 1], 1).unwrap(), TrailKind::HeadToHead);
        let fork = Dag::new(&["a", "b", "c"], &[("b", "a"), ("b", "c")]).unwrap();
        assert_eq!(fork.classify(&[0, 1, 2], 1).unwrap(), TrailKind::TailToTail);
        assert!(matches!(c.classify(&[0, 1, 2], 0), Err(Error::TrailIndex { .. })));
    }

    #[test]
    fn blocking() {
        let k = collider();
        assert!(k.is_blocked(&[0, 2, 1], &BTreeSet::new()).unwrap());
        let c = chain();
        assert!(c.is_blocked(&[0, 1, 2], &s(&c, &["b"])).unwrap());
        assert!(!c.is_blocked(&[0, 1, 2], &BTreeSet::new()).unwrap());
        assert!(matches!(c.is_blocked(&[0, 2], &BTreeSet::new()), Err(Error::NotATrail(_))));
    }

    #[test]
    fn separation_examples() {
        let k = collider();
        for f in [Dag::d_separated, Dag::d_separated_by_trails] {
            assert!(f(&k, &s(&k, &["a"]), &s(&k, &["b"]), &BTreeSet::new()).unwrap());
            assert!(!f(&k, &s(&k, &["a"]), &s(&k, &["b"]), &s(&k, &["c"])).unwrap());
            let c = chain();
            assert!(f(&c, &s(&c, &["a"]), &s(&c, &["c"]), &s(&c, &["b"])).unwrap());
            assert!(!f(&c, &s(&c, &["a"]), &s(&c, &["c"]), &BTreeSet::new()).unwrap());
            assert!(!f(&c, &s(&c, &["a"]), &s(&c, &["a"]), &BTreeSet::new()).unwrap());
        }
    }

    #[test]
    fn file_round_trip() {
        let text = "node a\nnode b\nnode c\nedge a c\nedge b c\n";
        let d = Dag::parse(text).unwrap();
        assert_eq!(d.to_string(), text);
        assert!(Dag::parse("node a\nedge a z\n").is_err());
    }
}
