//! Helpers shared by integration tests: amalgamation triples and
//! independent checkers.
#![allow(dead_code)]

use std::collections::BTreeSet;

use lkw_core::tableau::{to_tableau, AmalgamResult, Tableau, TableauTheory};
use lkw_core::FiniteStructure;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A structure made of copies of one small component, with the component
/// blocks listed so embeddings can map blocks to blocks.
struct Blocks {
    m: FiniteStructure,
    blocks: Vec<Vec<usize>>,
    /// Automorphisms of one block, as position permutations.
    autos: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug)]
pub enum Family {
    Pure,
    Complete,
    Loops,
    Cycles3,
    Matching,
    Arrows,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Pure,
        Family::Complete,
        Family::Loops,
        Family::Cycles3,
        Family::Matching,
        Family::Arrows,
    ];

    fn build(self, copies: usize) -> Blocks {
        let (size, edges, autos): (usize, Vec<(usize, usize)>, Vec<Vec<usize>>) = match self {
            Family::Pure | Family::Complete => (1, vec![], vec![vec![0]]),
            Family::Loops => (1, vec![(0, 0)], vec![vec![0]]),
            Family::Cycles3 => (
                3,
                vec![(0, 1), (1, 2), (2, 0)],
                vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]],
            ),
            Family::Matching => (2, vec![(0, 1), (1, 0)], vec![vec![0, 1], vec![1, 0]]),
            Family::Arrows => (2, vec![(0, 1)], vec![vec![0, 1]]),
        };
        let n = size * copies;
        let mut all = Vec::new();
        for c in 0..copies {
            all.extend(edges.iter().map(|&(a, b)| (c * size + a, c * size + b)));
        }
        if let Family::Complete = self {
            all = (0..n).flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b))).collect();
        }
        Blocks {
            m: FiniteStructure::digraph(n, &all).unwrap(),
            blocks: (0..copies).map(|c| (c * size..(c + 1) * size).collect()).collect(),
            autos,
        }
    }
}

/// Relabels `b` by a random permutation and returns the new structure and
/// the old -> new map.
fn shuffled(m: &FiniteStructure, rng: &mut ChaCha8Rng) -> (FiniteStructure, Vec<usize>) {
    let mut perm: Vec<usize> = (0..m.size()).collect();
    perm.shuffle(rng);
    (m.relabel(&perm).unwrap(), perm)
}

/// Random block-respecting embedding of `a` into `m`, composed with `m`'s
/// relabeling.
fn embed(a: &Blocks, m: &Blocks, relabel: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut targets: Vec<usize> = (0..m.blocks.len()).collect();
    targets.shuffle(rng);
    let mut inj = vec![0; a.m.size()];
    for (ab, &mb) in a.blocks.iter().zip(&targets) {
        let auto = &m.autos[rng.gen_range(0..m.autos.len())];
        for (pos, &e) in ab.iter().enumerate() {
            inj[e] = relabel[m.blocks[mb][auto[pos]]];
        }
    }
    inj
}

pub struct Triple {
    pub label: String,
    pub th: TableauTheory,
    pub a: Tableau,
    pub m0: Tableau,
    pub m1: Tableau,
    pub i0: Vec<usize>,
    pub i1: Vec<usize>,
}

/// Every k-tuple over `a` has the same types as its image: `a` is an induced
/// sub-tableau of `m` along `inj`.
pub fn is_induced_subtableau(a: &Tableau, m: &Tableau, inj: &[usize]) -> bool {
    let k = a.k();
    let n = a.size();
    let mut idx = vec![0usize; k];
    loop {
        let img: Vec<usize> = idx.iter().map(|&i| inj[i]).collect();
        if a.types_at(&idx) != m.types_at(&img) {
            return false;
        }
        let mut p = k;
        loop {
            if p == 0 {
                return true;
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] < n {
                break;
            }
            idx[p] = 0;
        }
    }
}

/// Generated triples `A ⊆ M0, M1` whose preconditions are checked, not
/// assumed. Candidates failing a precondition are dropped and counted.
pub fn amalgam_triples(seed: u64, per_family: usize) -> (Vec<Triple>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut dropped = 0;
    for k in 2..=3 {
        for fam in Family::ALL {
            for _ in 0..per_family {
                let a_copies = rng.gen_range(k..=k + 1);
                let c0 = rng.gen_range(a_copies..=a_copies + 2);
                let c1 = rng.gen_range(a_copies..=a_copies + 2);
                let (ab, b0, b1) = (fam.build(a_copies), fam.build(c0), fam.build(c1));
                // keep Z small for k = 3
                if k == 3 && b0.m.size() + b1.m.size() - ab.m.size() > 16 {
                    continue;
                }
                let (m0s, r0) = shuffled(&b0.m, &mut rng);
                let (m1s, r1) = shuffled(&b1.m, &mut rng);
                let i0 = embed(&ab, &b0, &r0, &mut rng);
                let i1 = embed(&ab, &b1, &r1, &mut rng);
                let th = TableauTheory::of_structure(&m0s, k).unwrap();
                let (Ok(a), Ok(m1)) = (to_tableau(&ab.m, &th), to_tableau(&m1s, &th)) else {
                    dropped += 1;
                    continue;
                };
                let m0 = to_tableau(&m0s, &th).unwrap();
                if !is_induced_subtableau(&a, &m0, &i0) || !is_induced_subtableau(&a, &m1, &i1) {
                    dropped += 1;
                    continue;
                }
                out.push(Triple {
                    label: format!("{fam:?} k={k} |A|={} |M0|={} |M1|={}", a.size(), m0.size(), m1.size()),
                    th,
                    a,
                    m0,
                    m1,
                    i0,
                    i1,
                });
            }
        }
    }
    (out, dropped)
}

/// Replays the merge log and checks that no two elements of `M0`, and no
/// two elements of `M1`, are ever identified.
pub fn merges_stay_injective(r: &AmalgamResult, n0: usize) -> Result<(), String> {
    let nz = r.m1_in_z.iter().copied().max().map_or(n0, |m| m.max(n0 - 1) + 1).max(n0);
    let in_m1: BTreeSet<usize> = r.m1_in_z.iter().copied().collect();
    let mut class: Vec<usize> = (0..nz).collect();
    for step in &r.log {
        for &(x, y) in &step.merges {
            let (cx, cy) = (class[x], class[y]);
            for c in class.iter_mut() {
                if *c == cy {
                    *c = cx;
                }
            }
        }
        for side in [(0..n0).collect::<Vec<_>>(), in_m1.iter().copied().collect()] {
            let classes: BTreeSet<usize> = side.iter().map(|&z| class[z]).collect();
            if classes.len() != side.len() {
                return Err(format!("step {}: two elements of one side identified", step.step));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Independent oracles and generators

use std::collections::{BTreeMap, VecDeque};

use lkw_core::dag::Dag;
use lkw_core::logic::Formula;

/// Textbook recursive evaluation by substitution. `extra` interprets
/// relation names outside the signature.
pub fn naive_eval(
    m: &FiniteStructure,
    f: &Formula,
    asg: &mut BTreeMap<String, usize>,
    extra: &BTreeMap<String, BTreeSet<Vec<usize>>>,
) -> bool {
    match f {
        Formula::Atom { rel, args } => {
            let t: Vec<usize> = args.iter().map(|a| asg[a]).collect();
            match m.signature().index_of(rel) {
                Some(i) => m.holds(i, &t),
                None => extra[rel].contains(&t),
            }
        }
        Formula::Eq(a, b) => asg[a] == asg[b],
        Formula::Not(g) => !naive_eval(m, g, asg, extra),
        Formula::And(gs) => gs.iter().all(|g| naive_eval(m, g, asg, extra)),
        Formula::Or(gs) => gs.iter().any(|g| naive_eval(m, g, asg, extra)),
        Formula::Exists(v, g) | Formula::Forall(v, g) => {
            let old = asg.get(v).copied();
            let want = matches!(f, Formula::Exists(..));
            let mut result = !want;
            for e in 0..m.size() {
                asg.insert(v.clone(), e);
                if naive_eval(m, g, asg, extra) == want {
                    result = want;
                    break;
                }
            }
            match old {
                Some(o) => asg.insert(v.clone(), o),
                None => asg.remove(v),
            };
            result
        }
    }
}

/// Pairs joined by a nonempty directed path, by breadth-first search from
/// every vertex.
pub fn bfs_reachable(m: &FiniteStructure) -> BTreeSet<Vec<usize>> {
    let n = m.size();
    let mut out = BTreeSet::new();
    for s in 0..n {
        let mut seen = vec![false; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&t| m.holds(0, &[s, t])).collect();
        for &t in &queue {
            seen[t] = true;
        }
        while let Some(v) = queue.pop_front() {
            out.insert(vec![s, v]);
            for w in 0..n {
                if !seen[w] && m.holds(0, &[v, w]) {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    out
}

/// Reflexive reachability by repeated squaring of the boolean adjacency
/// matrix.
pub fn matrix_reach(d: &Dag) -> Vec<Vec<bool>> {
    let n = d.len();
    let mut r: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j || d.has_edge(i, j)).collect()).collect();
    let mut len = 1;
    while len < n {
        let mut next = r.clone();
        for i in 0..n {
            for j in 0..n {
                if !next[i][j] {
                    next[i][j] = (0..n).any(|l| r[i][l] && r[l][j]);
                }
            }
        }
        r = next;
        len *= 2;
    }
    r
}

pub fn random_dag(rng: &mut ChaCha8Rng, max_n: usize) -> Dag {
    let n = rng.gen_range(1..=max_n);
    let p = rng.gen_range(0.15..0.5);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((order[i], order[j]));
            }
        }
    }
    Dag::with_size(n, &edges).unwrap()
}

pub fn random_subset(rng: &mut ChaCha8Rng, n: usize, p: f64) -> BTreeSet<usize> {
    (0..n).filter(|_| rng.gen_bool(p)).collect()
}

/// Random formula over `rels`, drawing variables from `vars`.
pub fn random_formula(rng: &mut ChaCha8Rng, depth: usize, vars: &[&str], rels: &[(&str, usize)]) -> Formula {
    let var = |rng: &mut ChaCha8Rng| vars[rng.gen_range(0..vars.len())].to_string();
    if depth == 0 || rng.gen_bool(0.25) {
        if rng.gen_bool(0.2) {
            return Formula::Eq(var(rng), var(rng));
        }
        let (rel, arity) = rels[rng.gen_range(0..rels.len())];
        return Formula::Atom {
            rel: rel.to_string(),
            args: (0..arity).map(|_| var(rng)).collect(),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| random_formula(rng, depth - 1, vars, rels);
    match rng.gen_range(0..5) {
        0 => Formula::Not(Box::new(sub(rng))),
        1 => Formula::And(vec![sub(rng), sub(rng)]),
        2 => Formula::Or(vec![sub(rng), sub(rng)]),
        3 => Formula::Exists(var(rng), Box::new(sub(rng))),
        _ => Formula::Forall(var(rng), Box::new(sub(rng))),
    }
}

/// Transitive closure as an expanded formula.
pub const TC: &str = "(exists z (or (E x0 x1) (and (X x0 z) (E z x1))))";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Binds every free variable outside `keep` existentially.
pub fn close_except(f: Formula, keep: &[&str]) -> Formula {
    f.free_variables()
        .into_iter()
        .filter(|v| !keep.contains(&v.as_str()))
        .fold(f, |g, v| Formula::Exists(v, Box::new(g)))
}

/// One inflationary step computed by `naive_eval`: the tuples satisfying
/// `body` when `X` is read as `stage`.
pub fn naive_step(
    m: &FiniteStructure,
    body: &Formula,
    r: usize,
    stage: &BTreeSet<Vec<usize>>,
) -> BTreeSet<Vec<usize>> {
    let extra = BTreeMap::from([("X".to_string(), stage.clone())]);
    all_tuples_naive(m.size(), r)
        .into_iter()
        .filter(|t| {
            let mut asg: BTreeMap<String, usize> = t.iter().enumerate().map(|(i, &e)| (format!("x{i}"), e)).collect();
            naive_eval(m, body, &mut asg, &extra)
        })
        .collect()
}

pub fn all_tuples_naive(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..r {
        out = out
            .into_iter()
            .flat_map(|t| (0..n).map(move |e| [t.clone(), vec![e]].concat()))
            .collect();
    }
    out
}

// ---------------------------------------------------------------------------
// Toy program runs

use lkw_core::closure::{ClosureConfig, ClosureOperator};
use lkw_core::program::{build_construction_graph, eval_star, CommandOperator, ConstructionGraph, ProgramSpec, RunTrace};

pub const TOY: &str = include_str!("../../data/edge_completion.prog");

pub struct ToyRun {
    pub spec: ProgramSpec,
    pub world: FiniteStructure,
    pub closure: ClosureOperator,
    pub trace: RunTrace,
    pub cg: ConstructionGraph,
}

/// Runs the edge-completion program in `world` from `start` under the
/// trivial closure and builds its construction graph.
pub fn toy_run(world: FiniteStructure, start: &BTreeSet<usize>) -> ToyRun {
    let spec = ProgramSpec::parse(TOY).unwrap();
    let op = CommandOperator::new(&spec, &world).unwrap();
    let closure = ClosureOperator::new(&world, ClosureConfig::trivial()).unwrap();
    let trace = eval_star(start, &spec, &op, &world, "world", &closure, 64).unwrap();
    let cg = build_construction_graph(&trace, &spec, &world, &closure).unwrap();
    ToyRun { spec, world, closure, trace, cg }
}

/// Vertices reachable from `start` along the listed edges, by a plain
/// worklist over the edge list.
pub fn cone(n: usize, edges: &[(usize, usize)], start: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut out = start.clone();
    loop {
        let before = out.len();
        for &(a, b) in edges {
            if out.contains(&a) {
                out.insert(b);
            }
        }
        if out.len() == before {
            return out.into_iter().filter(|&v| v < n).collect();
        }
    }
}
