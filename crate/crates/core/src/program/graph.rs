use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::{analyze, fmt_tuple, local_closure, restrict, to_world, Analysis, ProgramSpec, RunTrace};
use crate::closure::{ClosureConfig, ClosureOperator};
use crate::dag::Dag;
use crate::error::{Error, Result};
use crate::logic::{forcing_with, RelationTable};
use crate::structure::{all_tuples, encode, FiniteStructure};

/// `IG_Π[A]`: stage copies of `A^r` with forcing edges of every θ_i, then
/// the layers of ψ_σ appended after stage `e`.
#[derive(Debug, Clone)]
pub struct InductionGraph {
    pub size: usize,
    pub r: usize,
    /// Common stabilization index `e` of the θ_i.
    pub theta_stages: usize,
    /// Stabilization index of ψ_σ.
    pub psi_stages: usize,
    pub dag: Dag,
}

impl InductionGraph {
    pub fn layers(&self) -> usize {
        self.theta_stages + self.psi_stages + 1
    }

    pub fn vertex(&self, layer: usize, tuple: &[usize]) -> usize {
        layer * self.size.pow(self.r as u32) + encode(tuple, self.size)
    }
}

type Close<'a> = dyn Fn(&BTreeSet<usize>) -> Result<BTreeSet<usize>> + 'a;

/// Edges of the induction graph over vertex codes `layer * |A|^r + code`.
fn induction_edges(a: &FiniteStructure, spec: &ProgramSpec, an: &Analysis, close: &Close) -> Result<(usize, usize, Vec<(usize, usize)>)> {
    let n = a.size();
    let r = spec.r();
    let width = n.pow(r as u32);
    let e = an.theta.iter().map(|s| s.stabilization_index()).max().unwrap_or(0);
    let ea = an.psi.stabilization_index();
    let mut edges = Vec::new();
    for layer in 0..e + ea {
        edges.extend((0..width).map(|c| (layer * width + c, (layer + 1) * width + c)));
    }
    let mut push = |pairs: BTreeSet<(Vec<usize>, Vec<usize>)>, layer: usize| {
        for (b, t) in pairs {
            edges.push((layer * width + encode(&b, n), (layer + 1) * width + encode(&t, n)));
        }
    };
    for (theta, stages) in spec.theta().iter().zip(&an.theta) {
        for t in 0..stages.stabilization_index() {
            push(forcing_with(a, stages.stage(t), theta, &[], close)?, t);
        }
    }
    let rule = spec.sigma_rule(&an.sigma)?;
    let names = spec.test_symbols();
    let extras: Vec<(&str, &RelationTable)> = names.iter().map(|s| s.as_str()).zip(&an.x_tables).collect();
    for t in 0..ea {
        push(forcing_with(a, an.psi.stage(t), &rule.psi, &extras, close)?, e + t);
    }
    Ok((e, ea, edges))
}

pub fn build_induction_graph(a: &FiniteStructure, spec: &ProgramSpec, cfg: ClosureConfig) -> Result<InductionGraph> {
    let an = analyze(a, spec)?;
    let op = ClosureOperator::new(a, cfg)?;
    let close = |s: &BTreeSet<usize>| op.close(s);
    let (e, ea, edges) = induction_edges(a, spec, &an, &close)?;
    let r = spec.r();
    let tuples = all_tuples(a.size(), r);
    let names: Vec<String> = (0..=e + ea)
        .flat_map(|l| tuples.iter().map(move |t| format!("{l}:{}", fmt_tuple(t))))
        .collect();
    Ok(InductionGraph {
        size: a.size(),
        r,
        theta_stages: e,
        psi_stages: ea,
        dag: Dag::from_parts(names, &edges)?,
    })
}

/// What the enlarged induction graph behind one pair of adjacent layers
/// looked like.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerProvenance {
    pub set_index: usize,
    pub theta_stages: usize,
    pub psi_stages: usize,
    pub ig_edges: usize,
    pub star_edges: usize,
    pub requests: usize,
}

/// `CG[A]`: layer `j` holds `(★_{j-1}, ā)` for `ā ∈ A_j^r`.
#[derive(Debug, Clone)]
pub struct ConstructionGraph {
    r: usize,
    world: String,
    sets: Vec<BTreeSet<usize>>,
    vertices: Vec<(usize, Vec<usize>)>,
    index: HashMap<(usize, Vec<usize>), usize>,
    dag: Dag,
    provenance: Vec<LayerProvenance>,
    closure: ClosureOperator,
}

impl ConstructionGraph {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn world(&self) -> &str {
        &self.world
    }

    /// Elements of the first layer, `A_0`.
    pub fn base(&self) -> &BTreeSet<usize> {
        &self.sets[0]
    }

    pub fn layer_count(&self) -> usize {
        self.sets.len()
    }

    pub fn layer_set(&self, j: usize) -> &BTreeSet<usize> {
        &self.sets[j]
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn closure(&self) -> &ClosureOperator {
        &self.closure
    }

    pub fn provenance(&self) -> &[LayerProvenance] {
        &self.provenance
    }

    /// Layer and tuple of a vertex.
    pub fn vertex(&self, v: usize) -> (usize, &[usize]) {
        (self.vertices[v].0, &self.vertices[v].1)
    }

    pub fn vertex_id(&self, layer: usize, tuple: &[usize]) -> Option<usize> {
        self.index.get(&(layer, tuple.to_vec())).copied()
    }

    /// `{★} × S^r` in the first layer.
    pub fn base_vertices(&self, s: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
        if let Some(e) = s.iter().find(|e| !self.sets[0].contains(e)) {
            return Err(Error::Program(format!("element {e} is not in the base set")));
        }
        let elems: Vec<usize> = s.iter().copied().collect();
        Ok(all_tuples(elems.len(), self.r)
            .iter()
            .map(|t| self.index[&(0, to_world(t, &elems))])
            .collect())
    }

    /// One-level label: first-layer vertices carry `((0,a0),...)`, later
    /// ones `(j; u ...)` naming their predecessors.
    pub fn label(&self, v: usize) -> String {
        let (j, t) = self.vertex(v);
        if j == 0 {
            let parts: Vec<String> = t.iter().map(|a| format!("(0,{a})")).collect();
            return format!("({})", parts.join(","));
        }
        let preds: Vec<&str> = self.dag.parents(v).iter().map(|&u| self.dag.name(u)).collect();
        format!("({j}; {})", preds.join(" "))
    }

    /// Fully expanded label tree: `λ(v) = ((j, λ(u)) : u a predecessor)`.
    /// Its size is exponential in the depth.
    pub fn label_tree(&self, v: usize) -> String {
        let j = self.vertex(v).0;
        if j == 0 {
            return self.label(v);
        }
        let parts: Vec<String> = self.dag.parents(v).iter().map(|&u| format!("({j},{})", self.label_tree(u))).collect();
        format!("({})", parts.join(","))
    }
}

impl fmt::Display for ConstructionGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# world {}", self.world)?;
        self.dag.fmt(f)?;
        for v in 0..self.vertices.len() {
            writeln!(f, "label {} {}", self.dag.name(v), self.label(v))?;
        }
        Ok(())
    }
}

fn vertex_name(j: usize, t: &[usize]) -> String {
    format!("s{}:{}", j as i64 - 1, fmt_tuple(t))
}

/// Builds `CG[A]` from a run. Each pair of adjacent layers `j, j+1` comes
/// from the enlarged induction graph of `A_j`: an edge joins `(★_{j-1}, ā)`
/// to `(★_j, b̄)` when `rng ā = rng b̄`, or when the enlarged graph has a
/// path between them and `ā ⊆ cl(b̄)`.
pub fn build_construction_graph(
    trace: &RunTrace,
    spec: &ProgramSpec,
    world: &FiniteStructure,
    closure: &ClosureOperator,
) -> Result<ConstructionGraph> {
    let r = spec.r();
    let steps = trace.steps.len().min(trace.sets.len() - 1);
    let sets: Vec<BTreeSet<usize>> = trace.sets[..=steps].to_vec();
    let mut vertices = Vec::new();
    let mut index = HashMap::new();
    for (j, s) in sets.iter().enumerate() {
        let elems: Vec<usize> = s.iter().copied().collect();
        for t in all_tuples(elems.len(), r) {
            let w = to_world(&t, &elems);
            index.insert((j, w.clone()), vertices.len());
            vertices.push((j, w));
        }
    }
    let mut edges = BTreeSet::new();
    let mut provenance = Vec::new();
    let mut cl_cache: HashMap<BTreeSet<usize>, BTreeSet<usize>> = HashMap::new();
    let mut close = |s: BTreeSet<usize>| -> Result<BTreeSet<usize>> {
        if let Some(c) = cl_cache.get(&s) {
            return Ok(c.clone());
        }
        let c = closure.close(&s)?;
        cl_cache.insert(s, c.clone());
        Ok(c)
    };
    for (i, step) in trace.steps[..steps].iter().enumerate() {
        let (sub, map) = restrict(world, &sets[i])?;
        let an = analyze(&sub, spec)?;
        let test = an.test_structure(&sub)?;
        let req: Vec<Vec<usize>> = all_tuples(sub.size(), r)
            .into_iter()
            .filter(|c| an.unanswered.contains(c) && super::pi_token(&test, c) == step.pi)
            .collect();
        let req_world: Vec<Vec<usize>> = req.iter().map(|c| to_world(c, &map)).collect();
        if req_world != step.req || an.sigma != step.sigma {
            return Err(Error::Program(format!("trace step {i} does not match the program")));
        }
        let lc = local_closure(closure, &map);
        let (e, ea, ig) = induction_edges(&sub, spec, &an, &lc)?;
        let width = sub.size().pow(r as u32);
        let last = e + ea;
        let mut preds = vec![Vec::new(); (last + 1) * width];
        for &(u, v) in &ig {
            preds[v].push(u);
        }
        let next_elems = &sets[i + 1];
        let mut star_edges = 0;
        // sources in layer 0 of each requesting tuple, and its star targets
        let mut reach: BTreeMap<Vec<usize>, BTreeSet<Vec<usize>>> = BTreeMap::new();
        for (c, cw) in req.iter().zip(&req_world) {
            let resp = step
                .responses
                .iter()
                .find(|x| &x.request == cw)
                .ok_or_else(|| Error::Program(format!("trace step {i} has no response for ({})", fmt_tuple(cw))))?;
            let cl = close(resp.representative.iter().copied().collect())?;
            let elems: Vec<usize> = cl.intersection(next_elems).copied().collect();
            let targets: Vec<Vec<usize>> = all_tuples(elems.len(), r).iter().map(|t| to_world(t, &elems)).collect();
            star_edges += targets.len();
            let mut seen = vec![false; preds.len()];
            let start = last * width + encode(c, sub.size());
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                if v < width {
                    reach.entry(to_world(&crate::pebble::decode(v, sub.size(), r), &map)).or_default().extend(targets.iter().cloned());
                }
                for &u in &preds[v] {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
        }
        let mut by_range: HashMap<BTreeSet<usize>, Vec<usize>> = HashMap::new();
        for (v, (j, t)) in vertices.iter().enumerate() {
            if *j == i + 1 {
                by_range.entry(t.iter().copied().collect()).or_default().push(v);
            }
        }
        for (u, (j, a)) in vertices.iter().enumerate() {
            if *j != i {
                continue;
            }
            let range: BTreeSet<usize> = a.iter().copied().collect();
            if let Some(vs) = by_range.get(&range) {
                edges.extend(vs.iter().map(|&v| (u, v)));
            }
            if let Some(targets) = reach.get(a) {
                for b in targets {
                    if range.is_subset(&close(b.iter().copied().collect())?) {
                        edges.insert((u, index[&(i + 1, b.clone())]));
                    }
                }
            }
        }
        provenance.push(LayerProvenance {
            set_index: i,
            theta_stages: e,
            psi_stages: ea,
            ig_edges: ig.len(),
            star_edges,
            requests: req.len(),
        });
    }
    let names: Vec<String> = vertices.iter().map(|(j, t)| vertex_name(*j, t)).collect();
    let edges: Vec<(usize, usize)> = edges.into_iter().collect();
    let dag = Dag::from_parts(names, &edges)?;
    Ok(ConstructionGraph {
        r,
        world: trace.world.clone(),
        sets,
        vertices,
        index,
        dag,
        provenance,
        closure: closure.clone(),
    })
}

/// Hereditary descendants: `{★} × A0^r` closed under "some predecessor is
/// already in".
pub fn hdesc(cg: &ConstructionGraph, a0: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
    let start = cg.base_vertices(a0)?;
    cg.dag.descendants(&start)
}
