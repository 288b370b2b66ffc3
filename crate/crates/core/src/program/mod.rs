//! Programs run inside a finite world: test expansions, completeness,
//! command operators, runs, induction and construction graphs, local
//! separation and deviation probes.
//!
//! Naming inside program files: the auxiliary symbol of every θ and ψ body
//! is `X` with free variables `x0..x{r-1}`; sentences of Φ see the test
//! symbols as `X0, X1, ...`; ξ sees ψ's fixed point as `Y` and has free
//! variables `y0..` and `z0..z{r-1}`.

mod audit;
mod command;
mod graph;
mod run;
mod separation;

pub use audit::{audit_condition3, audit_genuineness, audit_weak_invariance, GenuinenessMismatch};
pub use command::{CommandOperator, Response};
pub use graph::{build_construction_graph, build_induction_graph, hdesc, ConstructionGraph, InductionGraph, LayerProvenance};
pub use run::{eval_star, RunTrace, Step};
pub use separation::{deviation_member, locally_separated, PartialType, Strength, DEFAULT_SUBSET_LIMIT};

use std::collections::BTreeSet;
use std::fmt;

use crate::closure::ClosureOperator;
use crate::error::{parse_err, Error, Result};
use crate::logic::{ifp_stages_with, ExpandedFormula, Formula, Query, RelationTable, StageSequence};
use crate::exec::Exec;
use crate::pebble::qf_token;
use crate::structure::{all_tuples, strip_comment, FiniteStructure, Signature};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaRule {
    pub psi: ExpandedFormula,
    pub xi: Formula,
}

/// One `[command σ π]` section. `None` stands for the `*` wildcard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandRule {
    pub sigma: Option<Vec<bool>>,
    pub pi: Option<String>,
    pub equiv: Formula,
    pub chi: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramSpec {
    r: usize,
    y_arity: usize,
    theta: Vec<ExpandedFormula>,
    phi: Vec<Formula>,
    sigma: Vec<(Option<Vec<bool>>, SigmaRule)>,
    commands: Vec<CommandRule>,
}

fn vars(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn check_free(f: &Formula, allowed: &[String], what: &str) -> Result<()> {
    match f.free_variables().into_iter().find(|v| !allowed.contains(v)) {
        Some(v) => Err(Error::Program(format!("{what}: free variable `{v}` not allowed"))),
        None => Ok(()),
    }
}

pub(crate) fn bits(v: &[bool]) -> String {
    if v.is_empty() {
        return "-".into();
    }
    v.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn parse_bits(s: &str, line: usize) -> Result<Option<Vec<bool>>> {
    match s {
        "*" => Ok(None),
        "-" => Ok(Some(Vec::new())),
        _ => s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(parse_err(line, format!("bad bit vector `{s}`"))),
            })
            .collect::<Result<Vec<bool>>>()
            .map(Some),
    }
}

impl ProgramSpec {
    pub fn new(
        r: usize,
        y_arity: usize,
        theta: Vec<ExpandedFormula>,
        phi: Vec<Formula>,
        sigma: Vec<(Option<Vec<bool>>, SigmaRule)>,
        commands: Vec<CommandRule>,
    ) -> Result<Self> {
        if r == 0 {
            return Err(Error::Program("tuple arity r must be positive".into()));
        }
        for (i, t) in theta.iter().enumerate() {
            if t.arity() != r || t.aux() != "X" {
                return Err(Error::Program(format!("theta {i} must be r-ary in `X`")));
            }
            if !t.is_proper_exists() {
                return Err(Error::Program(format!("theta {i} is not a proper existential formula")));
            }
        }
        for (i, p) in phi.iter().enumerate() {
            check_free(p, &[], &format!("phi {i}"))?;
        }
        let n = phi.len();
        let zs = [vars("y", y_arity), vars("z", r)].concat();
        for (i, (key, rule)) in sigma.iter().enumerate() {
            if key.as_ref().is_some_and(|k| k.len() != n) {
                return Err(Error::Program(format!("sigma rule {i} has {} bits, expected {n}", key.as_ref().map_or(0, |k| k.len()))));
            }
            if sigma[..i].iter().any(|(other, _)| other == key) {
                return Err(Error::Program(format!("duplicate sigma rule `{}`", key.as_deref().map_or("*".into(), bits))));
            }
            if rule.psi.arity() != r || rule.psi.aux() != "X" {
                return Err(Error::Program(format!("psi of rule {i} must be r-ary in `X`")));
            }
            if !rule.psi.is_proper_exists() {
                return Err(Error::Program(format!("psi of rule {i} is not a proper existential formula")));
            }
            check_free(&rule.xi, &zs, &format!("xi of rule {i}"))?;
        }
        let ev = [vars("x", r), vars("w", r)].concat();
        let cv = [vars("a", r), vars("c", r), vars("b", r)].concat();
        for (i, c) in commands.iter().enumerate() {
            if c.sigma.as_ref().is_some_and(|k| k.len() != n) {
                return Err(Error::Program(format!("command {i} has a sigma of the wrong length")));
            }
            if commands[..i].iter().any(|o| o.sigma == c.sigma && o.pi == c.pi) {
                return Err(Error::Program(format!("duplicate command section {i}")));
            }
            check_free(&c.equiv, &ev, &format!("E of command {i}"))?;
            check_free(&c.chi, &cv, &format!("chi of command {i}"))?;
        }
        Ok(ProgramSpec {
            r,
            y_arity,
            theta,
            phi,
            sigma,
            commands,
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn y_arity(&self) -> usize {
        self.y_arity
    }

    pub fn theta(&self) -> &[ExpandedFormula] {
        &self.theta
    }

    pub fn phi(&self) -> &[Formula] {
        &self.phi
    }

    pub fn commands(&self) -> &[CommandRule] {
        &self.commands
    }

    pub fn test_symbols(&self) -> Vec<String> {
        vars("X", self.theta.len())
    }

    /// The rule for `sigma`: an exact section wins over `[sigma *]`.
    pub fn sigma_rule(&self, sigma: &[bool]) -> Result<&SigmaRule> {
        let exact = self.sigma.iter().find(|(k, _)| k.as_deref() == Some(sigma));
        exact
            .or_else(|| self.sigma.iter().find(|(k, _)| k.is_none()))
            .map(|(_, r)| r)
            .ok_or_else(|| Error::MissingSigma(bits(sigma)))
    }

    pub fn parse(text: &str) -> Result<Self> {
        enum Section {
            Header,
            Theta,
            Phi,
            Sigma(Option<Vec<bool>>, Option<Formula>, Option<Formula>),
            Command(Option<Vec<bool>>, Option<String>, Option<Formula>, Option<Formula>),
        }
        let mut r = None;
        let mut y_arity = 0;
        let mut theta_src = Vec::new();
        let mut phi = Vec::new();
        let mut sigma_src = Vec::new();
        let mut commands = Vec::new();
        let mut section = Section::Header;
        let mut section_line = 0;
        let mut flush = |section: Section, line: usize| -> Result<()> {
            match section {
                Section::Sigma(key, Some(psi), Some(xi)) => sigma_src.push((key, psi, xi)),
                Section::Command(sigma, pi, Some(equiv), Some(chi)) => commands.push(CommandRule { sigma, pi, equiv, chi }),
                Section::Sigma(..) => return Err(parse_err(line, "sigma section needs `psi:` and `xi:`")),
                Section::Command(..) => return Err(parse_err(line, "command section needs `E:` and `chi:`")),
                _ => {}
            }
            Ok(())
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = strip_comment(raw).trim();
            if s.is_empty() {
                continue;
            }
            if let Some(head) = s.strip_prefix('[') {
                let head = head
                    .strip_suffix(']')
                    .ok_or_else(|| parse_err(line, "unterminated section header"))?;
                let parts: Vec<&str> = head.split_whitespace().collect();
                let next = match parts.as_slice() {
                    ["theta"] => Section::Theta,
                    ["phi"] => Section::Phi,
                    ["sigma", b] => Section::Sigma(parse_bits(b, line)?, None, None),
                    ["command", b, p] => {
                        let pi = (*p != "*").then(|| p.to_string());
                        Section::Command(parse_bits(b, line)?, pi, None, None)
                    }
                    _ => return Err(parse_err(line, format!("unknown section `[{head}]`"))),
                };
                flush(std::mem::replace(&mut section, next), section_line)?;
                section_line = line;
                continue;
            }
            let formula = |t: &str| Formula::parse(t).map_err(|e| parse_err(line, e.to_string()));
            match &mut section {
                Section::Header => {
                    let parts: Vec<&str> = s.split_whitespace().collect();
                    let num = |t: &str| t.parse::<usize>().map_err(|_| parse_err(line, format!("bad number `{t}`")));
                    match parts.as_slice() {
                        ["r", v] => r = Some(num(v)?),
                        ["ybar", v] => y_arity = num(v)?,
                        _ => return Err(parse_err(line, format!("unexpected header line `{s}`"))),
                    }
                }
                Section::Theta => theta_src.push((line, formula(s)?)),
                Section::Phi => phi.push(formula(s)?),
                Section::Sigma(_, psi, xi) => {
                    if let Some(t) = s.strip_prefix("psi:") {
                        *psi = Some(formula(t)?);
                    } else if let Some(t) = s.strip_prefix("xi:") {
                        *xi = Some(formula(t)?);
                    } else {
                        return Err(parse_err(line, "expected `psi:` or `xi:`"));
                    }
                }
                Section::Command(_, _, equiv, chi) => {
                    if let Some(t) = s.strip_prefix("E:") {
                        *equiv = Some(formula(t)?);
                    } else if let Some(t) = s.strip_prefix("chi:") {
                        *chi = Some(formula(t)?);
                    } else {
                        return Err(parse_err(line, "expected `E:` or `chi:`"));
                    }
                }
            }
        }
        flush(section, section_line)?;
        let r = r.ok_or_else(|| parse_err(1, "missing `r` line"))?;
        let theta = theta_src
            .into_iter()
            .map(|(line, f)| ExpandedFormula::new(f, r).map_err(|e| parse_err(line, e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let sigma = sigma_src
            .into_iter()
            .map(|(key, psi, xi)| Ok((key, SigmaRule { psi: ExpandedFormula::new(psi, r)?, xi })))
            .collect::<Result<Vec<_>>>()?;
        ProgramSpec::new(r, y_arity, theta, phi, sigma, commands)
    }
}

impl fmt::Display for ProgramSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "r {}", self.r)?;
        writeln!(f, "ybar {}", self.y_arity)?;
        writeln!(f, "[theta]")?;
        for t in &self.theta {
            writeln!(f, "{t}")?;
        }
        writeln!(f, "[phi]")?;
        for p in &self.phi {
            writeln!(f, "{p}")?;
        }
        for (key, rule) in &self.sigma {
            writeln!(f, "[sigma {}]", key.as_deref().map_or("*".into(), bits))?;
            writeln!(f, "psi: {}", rule.psi)?;
            writeln!(f, "xi: {}", rule.xi)?;
        }
        for c in &self.commands {
            writeln!(f, "[command {} {}]", c.sigma.as_deref().map_or("*".into(), bits), c.pi.as_deref().unwrap_or("*"))?;
            writeln!(f, "E: {}", c.equiv)?;
            writeln!(f, "chi: {}", c.chi)?;
        }
        Ok(())
    }
}

/// Everything a program computes about one finite structure.
#[derive(Debug, Clone)]
pub(crate) struct Analysis {
    pub theta: Vec<StageSequence>,
    pub x_tables: Vec<RelationTable>,
    pub sigma: Vec<bool>,
    pub psi: StageSequence,
    /// Every `c̄ ∈ A^r` with `A^σ ⊨ ¬∃ȳ ξ(ȳ, c̄)`.
    pub unanswered: BTreeSet<Vec<usize>>,
    pub requests: BTreeSet<Vec<usize>>,
}

impl Analysis {
    pub fn test_structure(&self, a: &FiniteStructure) -> Result<FiniteStructure> {
        test_structure(a, &self.x_tables)
    }
}

fn theta_tables(a: &FiniteStructure, spec: &ProgramSpec) -> Result<(Vec<StageSequence>, Vec<RelationTable>)> {
    let mut stages = Vec::new();
    let mut tables = Vec::new();
    for t in &spec.theta {
        let s = ifp_stages_with(a, t, &[], Exec::default())?;
        tables.push(RelationTable::from_tuples(spec.r, a.size(), s.fixed_point()));
        stages.push(s);
    }
    Ok((stages, tables))
}

fn sigma_from_tables(a: &FiniteStructure, spec: &ProgramSpec, tables: &[RelationTable]) -> Result<Vec<bool>> {
    let names = spec.test_symbols();
    let decl: Vec<(&str, usize)> = names.iter().map(|n| (n.as_str(), spec.r)).collect();
    let refs: Vec<&RelationTable> = tables.iter().collect();
    spec.phi
        .iter()
        .map(|p| Ok(Query::compile(p, a.signature(), &decl, &[])?.eval(a, &refs, &[])))
        .collect()
}

/// `(A, θ_0^∞[A], ...)` as a structure over the signature extended by the
/// test symbols.
pub(crate) fn test_structure(a: &FiniteStructure, tables: &[RelationTable]) -> Result<FiniteStructure> {
    let mut rels = a.signature().relations().to_vec();
    for (i, t) in tables.iter().enumerate() {
        rels.push((format!("X{i}"), t.arity()));
    }
    let mut out = FiniteStructure::new(Signature::new(rels)?, a.size())?;
    let base = a.signature().len();
    for rel in 0..base {
        for t in a.facts(rel) {
            out.insert(rel, t.clone())?;
        }
    }
    for (i, t) in tables.iter().enumerate() {
        for tuple in t.tuples() {
            out.insert(base + i, tuple)?;
        }
    }
    Ok(out)
}

pub(crate) fn analyze(a: &FiniteStructure, spec: &ProgramSpec) -> Result<Analysis> {
    let (theta, x_tables) = theta_tables(a, spec)?;
    let sigma = sigma_from_tables(a, spec, &x_tables)?;
    let rule = spec.sigma_rule(&sigma)?;
    let names = spec.test_symbols();
    let extras: Vec<(&str, &RelationTable)> = names.iter().map(|n| n.as_str()).zip(&x_tables).collect();
    let psi = ifp_stages_with(a, &rule.psi, &extras, Exec::default())?;
    let y = RelationTable::from_tuples(spec.r, a.size(), psi.fixed_point());
    let free = [vars("y", spec.y_arity), vars("z", spec.r)].concat();
    let xi = Query::compile(&rule.xi, a.signature(), &[("Y", spec.r)], &free)?;
    let ys = all_tuples(a.size(), spec.y_arity);
    let mut args = Vec::with_capacity(free.len());
    let unanswered: BTreeSet<Vec<usize>> = all_tuples(a.size(), spec.r)
        .into_iter()
        .filter(|c| {
            !ys.iter().any(|yv| {
                args.clear();
                args.extend_from_slice(yv);
                args.extend_from_slice(c);
                xi.eval(a, &[&y], &args)
            })
        })
        .collect();
    let requests = psi.fixed_point().intersection(&unanswered).cloned().collect();
    Ok(Analysis {
        theta,
        x_tables,
        sigma,
        psi,
        unanswered,
        requests,
    })
}

/// `σ_A`: which sentences of Φ hold in the test expansion of `a`.
pub fn sigma_of(a: &FiniteStructure, spec: &ProgramSpec) -> Result<Vec<bool>> {
    let (_, tables) = theta_tables(a, spec)?;
    sigma_from_tables(a, spec, &tables)
}

/// Tuples of `ψ_σ^∞[A]` at which `¬∃ȳ ξ_σ(ȳ, ā)` holds. Empty exactly when
/// `a` is complete for the program.
pub fn requests_attention(a: &FiniteStructure, spec: &ProgramSpec) -> Result<BTreeSet<Vec<usize>>> {
    Ok(analyze(a, spec)?.requests)
}

/// Quantifier-free test type of `c` among `A^r`, as a token.
pub(crate) fn pi_token(test: &FiniteStructure, c: &[usize]) -> String {
    qf_token(test, c)
}

/// Closure in the world restricted to a subset, in the subset's local ids.
pub(crate) fn local_closure<'a>(
    op: &'a ClosureOperator,
    local_to_world: &'a [usize],
) -> impl Fn(&BTreeSet<usize>) -> Result<BTreeSet<usize>> + 'a {
    move |s: &BTreeSet<usize>| {
        let world: BTreeSet<usize> = s.iter().map(|&i| local_to_world[i]).collect();
        let closed = op.close(&world)?;
        Ok(local_to_world
            .iter()
            .enumerate()
            .filter(|(_, w)| closed.contains(w))
            .map(|(i, _)| i)
            .collect())
    }
}

/// Induced substructure of the world on a nonempty set.
pub(crate) fn restrict(world: &FiniteStructure, set: &BTreeSet<usize>) -> Result<(FiniteStructure, Vec<usize>)> {
    world.induced_substructure(set)
}

pub(crate) fn to_world(t: &[usize], map: &[usize]) -> Vec<usize> {
    t.iter().map(|&i| map[i]).collect()
}

pub(crate) fn fmt_tuple(t: &[usize]) -> String {
    t.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = include_str!("../../data/edge_completion.prog");

    #[test]
    fn toy_parses_and_round_trips() {
        let p = ProgramSpec::parse(TOY).unwrap();
        assert_eq!(p.r(), 2);
        assert_eq!(p.phi().len(), 2);
        assert_eq!(ProgramSpec::parse(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn trivial_sigma_examples() {
        let p = ProgramSpec::parse("r 1\n[phi]\n(and)\n[sigma *]\npsi: (or)\nxi: (and)\n").unwrap();
        let a = FiniteStructure::directed_cycle(3).unwrap();
        assert_eq!(sigma_of(&a, &p).unwrap(), vec![true]);
        assert!(requests_attention(&a, &p).unwrap().is_empty());
        let q = ProgramSpec::parse("r 1\n[theta]\n(and (X x0) (not (X x0)))\n[phi]\n(exists x (X0 x))\n[sigma 0]\npsi: (= x0 x0)\nxi: (or)\n").unwrap();
        assert_eq!(sigma_of(&a, &q).unwrap(), vec![false]);
        assert_eq!(requests_attention(&a, &q).unwrap().len(), 3);
    }

    #[test]
    fn path_endpoint_requests() {
        let p = ProgramSpec::parse(TOY).unwrap();
        let path = FiniteStructure::digraph(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(sigma_of(&path, &p).unwrap(), vec![false, true]);
        assert_eq!(requests_attention(&path, &p).unwrap(), BTreeSet::from([vec![2, 2]]));
        let c4 = FiniteStructure::directed_cycle(4).unwrap();
        assert_eq!(sigma_of(&c4, &p).unwrap(), vec![true, true]);
        assert!(requests_attention(&c4, &p).unwrap().is_empty());
    }

    #[test]
    fn malformed_programs() {
        assert!(matches!(ProgramSpec::parse("[phi]\n(and)\n"), Err(Error::Parse { .. })));
        let bad = "r 1\n[theta]\n(forall y (X x0))\n";
        assert!(matches!(ProgramSpec::parse(bad), Err(Error::Program(_))));
        let free = "r 1\n[phi]\n(X0 x)\n";
        assert!(matches!(ProgramSpec::parse(free), Err(Error::Program(_))));
        let missing = "r 1\n[phi]\n(and)\n[sigma 0]\npsi: (or)\nxi: (and)\n";
        let p = ProgramSpec::parse(missing).unwrap();
        let a = FiniteStructure::directed_cycle(2).unwrap();
        assert!(matches!(requests_attention(&a, &p), Err(Error::MissingSigma(_))));
    }
}
