use std::collections::{BTreeMap, BTreeSet};

use super::Formula;
use crate::error::{Error, Result};
use crate::structure::{encode, FiniteStructure};

/// A dense relation over `0..size` used to interpret symbols outside the
/// structure's own signature (`X`, `X0`, `Y`, ...).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationTable {
    arity: usize,
    size: usize,
    bits: Vec<bool>,
}

impl RelationTable {
    pub fn new(arity: usize, size: usize) -> Self {
        RelationTable {
            arity,
            size,
            bits: vec![false; size.pow(arity as u32)],
        }
    }

    pub fn from_tuples<'a>(arity: usize, size: usize, tuples: impl IntoIterator<Item = &'a Vec<usize>>) -> Self {
        let mut t = RelationTable::new(arity, size);
        for tuple in tuples {
            t.insert(tuple);
        }
        t
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn insert(&mut self, tuple: &[usize]) {
        debug_assert_eq!(tuple.len(), self.arity);
        self.bits[encode(tuple, self.size)] = true;
    }

    pub fn remove(&mut self, tuple: &[usize]) {
        self.bits[encode(tuple, self.size)] = false;
    }

    #[inline]
    pub fn contains(&self, tuple: &[usize]) -> bool {
        self.bits[encode(tuple, self.size)]
    }

    pub fn tuples(&self) -> BTreeSet<Vec<usize>> {
        let mut out = BTreeSet::new();
        crate::structure::for_each_index_tuple(self.size, self.arity, |t| {
            if self.contains(t) {
                out.insert(t.to_vec());
            }
            true
        });
        out
    }
}

#[derive(Debug, Clone)]
enum Node {
    Base { rel: usize, args: Vec<usize> },
    Extra { idx: usize, args: Vec<usize> },
    Eq(usize, usize),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Exists(usize, Box<Node>),
    Forall(usize, Box<Node>),
}

/// A formula compiled against a signature plus named extra relations, with
/// a fixed order of free variables.
#[derive(Debug, Clone)]
pub struct Query {
    node: Node,
    slots: usize,
    free: usize,
    extra_arities: Vec<usize>,
    relation_count: usize,
}

impl Query {
    /// Compiles `f`. `free` lists the variables supplied at evaluation time,
    /// in order; every free variable of `f` must be among them. `extras`
    /// names the additional relations and their arities, in the order their
    /// tables will be passed.
    pub fn compile(
        f: &Formula,
        sig: &crate::structure::Signature,
        extras: &[(&str, usize)],
        free: &[String],
    ) -> Result<Query> {
        for (name, _) in extras {
            if sig.index_of(name).is_some() {
                return Err(Error::Formula(format!("relation `{name}` is both in the signature and auxiliary")));
            }
        }
        let fv = f.free_variables();
        if let Some(v) = fv.iter().find(|v| !free.contains(v)) {
            return Err(Error::UnboundVariable(v.clone()));
        }
        let mut slots: BTreeMap<String, usize> = BTreeMap::new();
        for (i, v) in free.iter().enumerate() {
            slots.entry(v.clone()).or_insert(i);
        }
        let mut next = free.len();
        for v in f.variables() {
            slots.entry(v).or_insert_with(|| {
                next += 1;
                next - 1
            });
        }
        let node = build(f, sig, extras, &slots)?;
        Ok(Query {
            node,
            slots: next,
            free: free.len(),
            extra_arities: extras.iter().map(|e| e.1).collect(),
            relation_count: sig.len(),
        })
    }

    pub fn free_count(&self) -> usize {
        self.free
    }

    /// Truth value in `m` with the extra relations interpreted by `tables`
    /// and free variables assigned `args`.
    pub fn eval(&self, m: &FiniteStructure, tables: &[&RelationTable], args: &[usize]) -> bool {
        debug_assert_eq!(args.len(), self.free);
        debug_assert_eq!(tables.len(), self.extra_arities.len());
        debug_assert_eq!(m.signature().len(), self.relation_count);
        let mut env = vec![0usize; self.slots];
        env[..args.len()].copy_from_slice(args);
        let mut scratch = Vec::with_capacity(8);
        eval_node(&self.node, m, tables, &mut env, &mut scratch)
    }
}

fn build(
    f: &Formula,
    sig: &crate::structure::Signature,
    extras: &[(&str, usize)],
    slots: &BTreeMap<String, usize>,
) -> Result<Node> {
    let slot = |v: &String| slots[v];
    Ok(match f {
        Formula::Atom { rel, args } => {
            let idx_args: Vec<usize> = args.iter().map(slot).collect();
            if let Some(r) = sig.index_of(rel) {
                if sig.arity(r) != args.len() {
                    return Err(Error::ArityMismatch {
                        rel: rel.clone(),
                        expected: sig.arity(r),
                        got: args.len(),
                    });
                }
                Node::Base { rel: r, args: idx_args }
            } else if let Some(i) = extras.iter().position(|e| e.0 == rel) {
                if extras[i].1 != args.len() {
                    return Err(Error::ArityMismatch {
                        rel: rel.clone(),
                        expected: extras[i].1,
                        got: args.len(),
                    });
                }
                Node::Extra { idx: i, args: idx_args }
            } else {
                return Err(Error::UnknownRelation(rel.clone()));
            }
        }
        Formula::Eq(a, b) => Node::Eq(slot(a), slot(b)),
        Formula::Not(g) => Node::Not(Box::new(build(g, sig, extras, slots)?)),
        Formula::And(gs) => Node::And(gs.iter().map(|g| build(g, sig, extras, slots)).collect::<Result<_>>()?),
        Formula::Or(gs) => Node::Or(gs.iter().map(|g| build(g, sig, extras, slots)).collect::<Result<_>>()?),
        Formula::Exists(v, g) => Node::Exists(slot(v), Box::new(build(g, sig, extras, slots)?)),
        Formula::Forall(v, g) => Node::Forall(slot(v), Box::new(build(g, sig, extras, slots)?)),
    })
}

fn eval_node(
    node: &Node,
    m: &FiniteStructure,
    tables: &[&RelationTable],
    env: &mut Vec<usize>,
    scratch: &mut Vec<usize>,
) -> bool {
    match node {
        Node::Base { rel, args } => {
            scratch.clear();
            scratch.extend(args.iter().map(|&s| env[s]));
            m.holds(*rel, scratch)
        }
        Node::Extra { idx, args } => {
            scratch.clear();
            scratch.extend(args.iter().map(|&s| env[s]));
            tables[*idx].contains(scratch)
        }
        Node::Eq(a, b) => env[*a] == env[*b],
        Node::Not(g) => !eval_node(g, m, tables, env, scratch),
        Node::And(gs) => gs.iter().all(|g| eval_node(g, m, tables, env, scratch)),
        Node::Or(gs) => gs.iter().any(|g| eval_node(g, m, tables, env, scratch)),
        Node::Exists(v, g) | Node::Forall(v, g) => {
            let want = matches!(node, Node::Exists(..));
            let saved = env[*v];
            let mut result = !want;
            for e in 0..m.size() {
                env[*v] = e;
                if eval_node(g, m, tables, env, scratch) == want {
                    result = want;
                    break;
                }
            }
            env[*v] = saved;
            result
        }
    }
}

/// Tarskian truth of `f` in `m` under `asg`.
pub fn evaluate(m: &FiniteStructure, f: &Formula, asg: &BTreeMap<String, usize>) -> Result<bool> {
    evaluate_with(m, &[], f, asg)
}

/// As [`evaluate`], with extra relation symbols interpreted by tables.
pub fn evaluate_with(
    m: &FiniteStructure,
    extras: &[(&str, &RelationTable)],
    f: &Formula,
    asg: &BTreeMap<String, usize>,
) -> Result<bool> {
    let names: Vec<String> = asg.keys().cloned().collect();
    let values: Vec<usize> = asg.values().copied().collect();
    if let Some(&elem) = values.iter().find(|&&e| e >= m.size()) {
        return Err(Error::OutOfRange { elem, size: m.size() });
    }
    let decl: Vec<(&str, usize)> = extras.iter().map(|(n, t)| (*n, t.arity())).collect();
    let q = Query::compile(f, m.signature(), &decl, &names)?;
    let tables: Vec<&RelationTable> = extras.iter().map(|e| e.1).collect();
    Ok(q.eval(m, &tables, &values))
}
