use std::fmt;

use super::{fmt_tuple, vars, CommandRule, ProgramSpec};
use crate::error::{Error, Result};
use crate::logic::Query;
use crate::pebble::decode;
use crate::structure::{all_tuples, encode, FiniteStructure};

/// Answer to one requesting tuple: every `b̄` the response formula allows,
/// the chosen (least) one, and its `E`-class as an imaginary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub request: Vec<usize>,
    pub relation: Vec<Vec<usize>>,
    pub chosen: Vec<usize>,
    /// Code of the least member of the class.
    pub class: usize,
    pub representative: Vec<usize>,
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel: Vec<String> = self.relation.iter().map(|t| format!("({})", fmt_tuple(t))).collect();
        write!(
            f,
            "response ({}) -> ({}) class {} rep ({}) relation {}",
            fmt_tuple(&self.request),
            fmt_tuple(&self.chosen),
            self.class,
            fmt_tuple(&self.representative),
            rel.join(" ")
        )
    }
}

#[derive(Debug, Clone)]
struct Compiled {
    sigma: Option<Vec<bool>>,
    pi: Option<String>,
    chi: Query,
    /// Class code of every r-tuple of the world.
    classes: Vec<usize>,
}

/// Command sections of a program compiled against one world. Each `E` is
/// checked to be an equivalence relation on `W^r`.
#[derive(Debug, Clone)]
pub struct CommandOperator {
    r: usize,
    size: usize,
    rules: Vec<Compiled>,
}

fn compile_rule(rule: &CommandRule, r: usize, world: &FiniteStructure, index: usize) -> Result<Compiled> {
    let n = world.size();
    let space = all_tuples(n, r);
    let eq = Query::compile(&rule.equiv, world.signature(), &[], &[vars("x", r), vars("w", r)].concat())?;
    let m = space.len();
    let mut rel = vec![false; m * m];
    let mut args = Vec::with_capacity(2 * r);
    for (i, x) in space.iter().enumerate() {
        for (j, w) in space.iter().enumerate() {
            args.clear();
            args.extend_from_slice(x);
            args.extend_from_slice(w);
            rel[i * m + j] = eq.eval(world, &[], &args);
        }
    }
    let fail = |what: &str, t: &[&Vec<usize>]| {
        let ts: Vec<String> = t.iter().map(|t| format!("({})", fmt_tuple(t))).collect();
        Err(Error::Program(format!("E of command {index} is not {what} at {}", ts.join(" "))))
    };
    for i in 0..m {
        if !rel[i * m + i] {
            return fail("reflexive", &[&space[i]]);
        }
        for j in 0..m {
            if rel[i * m + j] && !rel[j * m + i] {
                return fail("symmetric", &[&space[i], &space[j]]);
            }
            if !rel[i * m + j] {
                continue;
            }
            for l in 0..m {
                if rel[j * m + l] && !rel[i * m + l] {
                    return fail("transitive", &[&space[i], &space[j], &space[l]]);
                }
            }
        }
    }
    let classes = (0..m).map(|i| (0..m).find(|&j| rel[i * m + j]).expect("reflexive")).collect();
    let chi = Query::compile(&rule.chi, world.signature(), &[], &[vars("a", r), vars("c", r), vars("b", r)].concat())?;
    Ok(Compiled {
        sigma: rule.sigma.clone(),
        pi: rule.pi.clone(),
        chi,
        classes,
    })
}

impl CommandOperator {
    pub fn new(spec: &ProgramSpec, world: &FiniteStructure) -> Result<Self> {
        let rules = spec
            .commands()
            .iter()
            .enumerate()
            .map(|(i, c)| compile_rule(c, spec.r(), world, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(CommandOperator {
            r: spec.r(),
            size: world.size(),
            rules,
        })
    }

    /// Most specific section for `(σ, π)`: exact pair, then `(σ, *)`,
    /// `(*, π)`, `(*, *)`.
    fn rule(&self, sigma: &[bool], pi: &str) -> Result<&Compiled> {
        let score = |c: &Compiled| match (&c.sigma, &c.pi) {
            (Some(s), _) if s != sigma => None,
            (_, Some(p)) if p != pi => None,
            (s, p) => Some(2 * s.is_none() as u8 + p.is_none() as u8),
        };
        self.rules
            .iter()
            .filter_map(|c| score(c).map(|s| (s, c)))
            .min_by_key(|(s, _)| *s)
            .map(|(_, c)| c)
            .ok_or_else(|| Error::Response(format!("no command for sigma {} and type {pi}", super::bits(sigma))))
    }

    /// Responds to the requesting tuple `c` relative to the attention
    /// tuple `a`, all in world ids.
    pub fn respond(&self, world: &FiniteStructure, sigma: &[bool], pi: &str, a: &[usize], c: &[usize]) -> Result<Response> {
        if world.size() != self.size {
            return Err(Error::Program("command operator compiled for a different world".into()));
        }
        let rule = self.rule(sigma, pi)?;
        let r = self.r;
        let mut args = Vec::with_capacity(3 * r);
        let relation: Vec<Vec<usize>> = all_tuples(self.size, r)
            .into_iter()
            .filter(|b| {
                args.clear();
                args.extend_from_slice(a);
                args.extend_from_slice(c);
                args.extend_from_slice(b);
                rule.chi.eval(world, &[], &args)
            })
            .collect();
        let Some(chosen) = relation.first().cloned() else {
            return Err(Error::Response(format!("no response for ({})", fmt_tuple(c))));
        };
        let class = rule.classes[encode(&chosen, self.size)];
        Ok(Response {
            request: c.to_vec(),
            relation,
            chosen,
            class,
            representative: decode(class, self.size, r),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_equivalence_is_rejected() {
        let text = "r 1\n[phi]\n[sigma -]\npsi: (or)\nxi: (and)\n[command * *]\nE: (E x0 w0)\nchi: (and)\n";
        let p = ProgramSpec::parse(text).unwrap();
        let w = FiniteStructure::directed_cycle(3).unwrap();
        assert!(matches!(CommandOperator::new(&p, &w), Err(Error::Program(_))));
    }

    #[test]
    fn classes_and_least_response() {
        // E: same first coordinate; respond with any b̄ starting at c's successor
        let text = "r 2\n[phi]\n[sigma -]\npsi: (or)\nxi: (and)\n[command - *]\nE: (= x0 w0)\nchi: (E c0 b0)\n";
        let p = ProgramSpec::parse(text).unwrap();
        let w = FiniteStructure::directed_cycle(4).unwrap();
        let op = CommandOperator::new(&p, &w).unwrap();
        let r = op.respond(&w, &[], "0", &[2, 2], &[2, 2]).unwrap();
        assert_eq!(r.chosen, vec![3, 0]);
        assert_eq!(r.relation.len(), 4);
        assert_eq!(r.representative, vec![3, 0]);
        let none = "r 1\n[phi]\n[sigma -]\npsi: (or)\nxi: (and)\n[command - *]\nE: (= x0 w0)\nchi: (or)\n";
        let op = CommandOperator::new(&ProgramSpec::parse(none).unwrap(), &w).unwrap();
        assert!(matches!(op.respond(&w, &[], "0", &[0], &[0]), Err(Error::Response(_))));
    }
}
