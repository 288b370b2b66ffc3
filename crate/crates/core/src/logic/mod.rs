//! First-order formulas in prefix notation, their evaluation over finite
//! structures, and inflationary fixed points of expanded formulas.

mod eval;
mod ifp;

pub use eval::{evaluate, evaluate_with, Query, RelationTable};
pub use ifp::{forcing_triples, forcing_with, ifp_stages, ifp_stages_with, ExpandedFormula, StageSequence};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::structure::is_identifier;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom { rel: String, args: Vec<String> },
    Eq(String, String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    /// The empty conjunction.
    pub fn truth() -> Formula {
        Formula::And(Vec::new())
    }

    pub fn falsity() -> Formula {
        Formula::Or(Vec::new())
    }

    pub fn atom(rel: &str, args: &[&str]) -> Formula {
        Formula::Atom {
            rel: rel.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Formula> {
        let tokens = tokenize(text)?;
        let mut pos = 0;
        let f = parse_formula(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::Formula(format!("trailing input after formula: `{}`", tokens[pos])));
        }
        Ok(f)
    }

    /// Every variable name occurring in the formula, free or bound.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk_vars(&mut |v| {
            out.insert(v.to_string());
        });
        out
    }

    /// Number of distinct variable names; `φ ∈ L^k` iff this is at most `k`.
    pub fn variable_count(&self) -> usize {
        self.variables().len()
    }

    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    /// Relation symbols with the arity of their first occurrence; a symbol
    /// used at two arities is an error.
    pub fn relations(&self) -> Result<BTreeMap<String, usize>> {
        let mut out = BTreeMap::new();
        let mut err = None;
        self.walk(&mut |f| {
            if let Formula::Atom { rel, args } = f {
                match out.get(rel) {
                    Some(&a) if a != args.len() && err.is_none() => {
                        err = Some(Error::ArityMismatch {
                            rel: rel.clone(),
                            expected: a,
                            got: args.len(),
                        })
                    }
                    Some(_) => {}
                    None => {
                        out.insert(rel.clone(), args.len());
                    }
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    pub fn mentions(&self, rel_name: &str) -> bool {
        let mut found = false;
        self.walk(&mut |f| {
            if let Formula::Atom { rel, .. } = f {
                found |= rel == rel_name;
            }
        });
        found
    }

    /// A block of existential quantifiers over a quantifier-free matrix.
    pub fn is_prenex_existential(&self) -> bool {
        match self {
            Formula::Exists(_, body) => body.is_prenex_existential(),
            f => f.is_quantifier_free(),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Atom { .. } | Formula::Eq(..) => true,
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(|f| f.is_quantifier_free()),
            Formula::Exists(..) | Formula::Forall(..) => false,
        }
    }

    fn walk(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Not(g) | Formula::Exists(_, g) | Formula::Forall(_, g) => g.walk(f),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.walk(f)),
            Formula::Atom { .. } | Formula::Eq(..) => {}
        }
    }

    fn walk_vars(&self, f: &mut impl FnMut(&str)) {
        self.walk(&mut |g| match g {
            Formula::Atom { args, .. } => args.iter().for_each(|a| f(a)),
            Formula::Eq(a, b) => {
                f(a);
                f(b)
            }
            Formula::Exists(v, _) | Formula::Forall(v, _) => f(v),
            _ => {}
        });
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let mut note = |v: &String, bound: &Vec<String>| {
            if !bound.contains(v) {
                out.insert(v.clone());
            }
        };
        match self {
            Formula::Atom { args, .. } => args.iter().for_each(|a| note(a, bound)),
            Formula::Eq(a, b) => {
                note(a, bound);
                note(b, bound);
            }
            Formula::Not(g) => g.collect_free(bound, out),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.collect_free(bound, out)),
            Formula::Exists(v, g) | Formula::Forall(v, g) => {
                bound.push(v.clone());
                g.collect_free(bound, out);
                bound.pop();
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom { rel, args } => {
                write!(f, "({rel}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            Formula::Eq(a, b) => write!(f, "(= {a} {b})"),
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(gs) | Formula::Or(gs) => {
                let op = if matches!(self, Formula::And(_)) { "and" } else { "or" };
                write!(f, "({op}")?;
                for g in gs {
                    write!(f, " {g}")?;
                }
                write!(f, ")")
            }
            Formula::Exists(v, g) => write!(f, "(exists {v} {g})"),
            Formula::Forall(v, g) => write!(f, "(forall {v} {g})"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    if out.is_empty() {
        return Err(Error::Formula("empty formula".into()));
    }
    Ok(out)
}

fn expect_var(tokens: &[String], pos: &mut usize) -> Result<String> {
    let t = tokens
        .get(*pos)
        .ok_or_else(|| Error::Formula("unexpected end of input, expected a variable".into()))?;
    if !is_identifier(t) {
        return Err(Error::Formula(format!("`{t}` is not a variable name")));
    }
    *pos += 1;
    Ok(t.clone())
}

fn parse_formula(tokens: &[String], pos: &mut usize) -> Result<Formula> {
    let open = tokens.get(*pos).ok_or_else(|| Error::Formula("unexpected end of input".into()))?;
    if open != "(" {
        return Err(Error::Formula(format!("expected `(`, found `{open}`")));
    }
    *pos += 1;
    let head = tokens
        .get(*pos)
        .ok_or_else(|| Error::Formula("unexpected end of input after `(`".into()))?
        .clone();
    *pos += 1;
    let f = match head.as_str() {
        "=" => {
            let a = expect_var(tokens, pos)?;
            let b = expect_var(tokens, pos)?;
            Formula::Eq(a, b)
        }
        "not" => Formula::Not(Box::new(parse_formula(tokens, pos)?)),
        "and" | "or" => {
            let mut parts = Vec::new();
            while tokens.get(*pos).map(String::as_str) == Some("(") {
                parts.push(parse_formula(tokens, pos)?);
            }
            if head == "and" {
                Formula::And(parts)
            } else {
                Formula::Or(parts)
            }
        }
        "exists" | "forall" => {
            let v = expect_var(tokens, pos)?;
            let body = Box::new(parse_formula(tokens, pos)?);
            if head == "exists" {
                Formula::Exists(v, body)
            } else {
                Formula::Forall(v, body)
            }
        }
        "(" | ")" => return Err(Error::Formula("expected an operator or relation name".into())),
        rel => {
            if !is_identifier(rel) {
                return Err(Error::Formula(format!("`{rel}` is not a relation name")));
            }
            let mut args = Vec::new();
            while let Some(t) = tokens.get(*pos) {
                if t == ")" {
                    break;
                }
                args.push(expect_var(tokens, pos)?);
            }
            if args.is_empty() {
                return Err(Error::Formula(format!("relation `{rel}` applied to no arguments")));
            }
            Formula::Atom {
                rel: rel.to_string(),
                args,
            }
        }
    };
    match tokens.get(*pos).map(String::as_str) {
        Some(")") => {
            *pos += 1;
            Ok(f)
        }
        Some(t) => Err(Error::Formula(format!("expected `)`, found `{t}`"))),
        None => Err(Error::Formula("missing `)`".into())),
    }
}
