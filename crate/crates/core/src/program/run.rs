use std::collections::BTreeSet;
use std::fmt;

use super::{analyze, bits, fmt_tuple, pi_token, restrict, to_world, CommandOperator, ProgramSpec, Response};
use crate::closure::ClosureOperator;
use crate::error::{Error, Result};
use crate::structure::{all_tuples, FiniteStructure};

/// One application of `eval` to an incomplete `A_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub index: usize,
    pub sigma: Vec<bool>,
    /// Requesting tuples of `A_i`, world ids.
    pub requests: BTreeSet<Vec<usize>>,
    pub attention: Vec<usize>,
    pub pi: String,
    pub req: Vec<Vec<usize>>,
    pub responses: Vec<Response>,
    pub added: BTreeSet<usize>,
}

/// A run `A_{-1}, A_0 = cl(A_{-1}), A_1, ...` inside the world.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunTrace {
    pub world: String,
    pub start: BTreeSet<usize>,
    /// `A_0, A_1, ...`
    pub sets: Vec<BTreeSet<usize>>,
    pub steps: Vec<Step>,
    /// σ of the last set.
    pub final_sigma: Vec<bool>,
    /// Index of the first complete set, if reached.
    pub stabilized: Option<usize>,
    pub truncated: bool,
}

impl RunTrace {
    pub fn final_set(&self) -> &BTreeSet<usize> {
        self.sets.last().expect("a run has at least A_0")
    }

    /// Whether the run stabilized within `p(|A_{-1}|)` steps, `p` given by
    /// its coefficients from the constant term up. `None` when truncated.
    pub fn within_polynomial(&self, coeffs: &[usize]) -> Option<bool> {
        let t = self.start.len();
        let bound = coeffs.iter().rev().fold(0usize, |acc, &c| acc.saturating_mul(t).saturating_add(c));
        self.stabilized.map(|s| s <= bound)
    }
}

fn fmt_set(s: &BTreeSet<usize>) -> String {
    let v: Vec<String> = s.iter().map(|e| e.to_string()).collect();
    format!("{{{}}}", v.join(","))
}

impl fmt::Display for RunTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "world {}", self.world)?;
        writeln!(f, "start {}", fmt_set(&self.start))?;
        for (i, s) in self.sets.iter().enumerate() {
            writeln!(f, "set {i} {}", fmt_set(s))?;
            if let Some(step) = self.steps.get(i) {
                writeln!(f, "step {i} sigma {} attention ({}) type {}", bits(&step.sigma), fmt_tuple(&step.attention), step.pi)?;
                let req: Vec<String> = step.req.iter().map(|t| format!("({})", fmt_tuple(t))).collect();
                writeln!(f, "step {i} req {}", req.join(" "))?;
                for r in &step.responses {
                    writeln!(f, "step {i} {r}")?;
                }
                writeln!(f, "step {i} added {}", fmt_set(&step.added))?;
            }
        }
        writeln!(f, "final sigma {}", bits(&self.final_sigma))?;
        match (self.stabilized, self.truncated) {
            (Some(s), _) => writeln!(f, "stabilized {s}"),
            (None, true) => writeln!(f, "truncated after {} sets", self.sets.len()),
            (None, false) => writeln!(f, "stalled"),
        }
    }
}

/// Runs the program from `a0`, drawing responses from `world`. At most
/// `max_steps` sets are examined; running out is reported, not an error.
pub fn eval_star(
    a0: &BTreeSet<usize>,
    spec: &ProgramSpec,
    op: &CommandOperator,
    world: &FiniteStructure,
    world_name: &str,
    closure: &ClosureOperator,
    max_steps: usize,
) -> Result<RunTrace> {
    if max_steps == 0 {
        return Err(Error::Program("max steps must be at least 1".into()));
    }
    let mut trace = RunTrace {
        world: world_name.to_string(),
        start: a0.clone(),
        sets: vec![closure.close(a0)?],
        steps: Vec::new(),
        final_sigma: Vec::new(),
        stabilized: None,
        truncated: false,
    };
    loop {
        let i = trace.sets.len() - 1;
        let current = trace.sets[i].clone();
        let (sub, map) = restrict(world, &current)?;
        let an = analyze(&sub, spec)?;
        trace.final_sigma = an.sigma.clone();
        if an.requests.is_empty() {
            trace.stabilized = Some(i);
            return Ok(trace);
        }
        if i + 1 >= max_steps {
            trace.truncated = true;
            return Ok(trace);
        }
        let test = an.test_structure(&sub)?;
        let (pi, attention) = an
            .requests
            .iter()
            .map(|t| (pi_token(&test, t), t.clone()))
            .min()
            .expect("nonempty");
        let req: Vec<Vec<usize>> = all_tuples(sub.size(), spec.r())
            .into_iter()
            .filter(|c| pi_token(&test, c) == pi && an.unanswered.contains(c))
            .collect();
        let attention_w = to_world(&attention, &map);
        let mut responses = Vec::with_capacity(req.len());
        let mut grown = current.clone();
        for c in &req {
            let cw = to_world(c, &map);
            let resp = op.respond(world, &an.sigma, &pi, &attention_w, &cw)?;
            grown.extend(resp.representative.iter().copied());
            responses.push(resp);
        }
        let next = closure.close(&grown)?;
        let added = next.difference(&current).copied().collect();
        trace.steps.push(Step {
            index: i,
            sigma: an.sigma.clone(),
            requests: an.requests.iter().map(|t| to_world(t, &map)).collect(),
            attention: attention_w,
            pi,
            req: req.iter().map(|t| to_world(t, &map)).collect(),
            responses,
            added,
        });
        if next == current {
            // no progress is possible; later steps would repeat this one
            trace.truncated = true;
            return Ok(trace);
        }
        trace.sets.push(next);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closure::ClosureConfig;

    const TOY: &str = include_str!("../../data/edge_completion.prog");

    fn setup(n: usize) -> (ProgramSpec, CommandOperator, FiniteStructure, ClosureOperator) {
        let p = ProgramSpec::parse(TOY).unwrap();
        let w = FiniteStructure::directed_cycle(n).unwrap();
        let op = CommandOperator::new(&p, &w).unwrap();
        let cl = ClosureOperator::new(&w, ClosureConfig::trivial()).unwrap();
        (p, op, w, cl)
    }

    #[test]
    fn path_grows_to_the_cycle() {
        let (p, op, w, cl) = setup(6);
        let t = eval_star(&BTreeSet::from([0, 1, 2]), &p, &op, &w, "C6", &cl, 20).unwrap();
        assert_eq!(t.stabilized, Some(3));
        assert_eq!(t.final_set(), &(0..6).collect());
        assert_eq!(t.steps[0].attention, vec![2, 2]);
        assert_eq!(t.steps[0].responses[0].chosen, vec![2, 3]);
        assert!(t.sets.windows(2).all(|w| w[0].is_subset(&w[1])));
        assert_eq!(t.within_polynomial(&[0, 1]), Some(true));
        assert_eq!(t.within_polynomial(&[2]), Some(false));
    }

    #[test]
    fn complete_start_and_truncation() {
        let (p, op, w, cl) = setup(5);
        let all: BTreeSet<usize> = (0..5).collect();
        let t = eval_star(&all, &p, &op, &w, "C5", &cl, 1).unwrap();
        assert_eq!((t.sets.len(), t.stabilized, t.steps.len()), (1, Some(0), 0));
        let t = eval_star(&BTreeSet::from([0]), &p, &op, &w, "C5", &cl, 1).unwrap();
        assert!(t.truncated && t.stabilized.is_none());
    }

    #[test]
    fn two_endpoints_answered_together() {
        let (p, op, w, cl) = setup(8);
        let t = eval_star(&BTreeSet::from([0, 4]), &p, &op, &w, "C8", &cl, 20).unwrap();
        assert_eq!(t.steps[0].req, vec![vec![0, 0], vec![4, 4]]);
        assert_eq!(t.sets[1], BTreeSet::from([0, 1, 4, 5]));
        assert_eq!(t.stabilized, Some(3));
    }
}
