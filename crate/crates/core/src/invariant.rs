//! The complete invariant `I^k`: classes of k-tuples in canonical order with
//! their quantifier-free types, the permutation action and accessibility.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use crate::error::{parse_err, Error, Result};
use crate::pebble::{refine_joint, KTypePartition, RefineOptions};
use crate::structure::{strip_comment, FiniteStructure, Signature};

/// `I^k(M)` on classes `1..=N`. Vectors indexed by class are 0-based
/// (`qf[c - 1]`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantStructure {
    k: usize,
    signature: Signature,
    qf: Vec<String>,
    /// For each `σ` in one-line notation, class `c` maps to `perm[σ][c-1]`.
    perm: BTreeMap<Vec<usize>, Vec<usize>>,
    acc: BTreeSet<(usize, usize)>,
}

/// All permutations of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn go(k: usize, cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                go(k, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(k, &mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// `(ā∘σ)_i = a_{σ(i)}`.
pub fn apply_perm(tuple: &[usize], sigma: &[usize]) -> Vec<usize> {
    sigma.iter().map(|&i| tuple[i]).collect()
}

fn sigma_name(sigma: &[usize]) -> String {
    sigma.iter().map(|i| char::from_digit(*i as u32, 36).expect("k <= 36")).collect()
}

fn parse_sigma(s: &str, k: usize, line: usize) -> Result<Vec<usize>> {
    let sigma: Option<Vec<usize>> = s.chars().map(|c| c.to_digit(36).map(|d| d as usize)).collect();
    let sigma = sigma.ok_or_else(|| parse_err(line, format!("bad permutation `{s}`")))?;
    let mut sorted = sigma.clone();
    sorted.sort_unstable();
    if sorted != (0..k).collect::<Vec<_>>() {
        return Err(parse_err(line, format!("`{s}` is not a permutation of 0..{k}")));
    }
    Ok(sigma)
}

pub fn build_invariant(m: &FiniteStructure, k: usize) -> Result<InvariantStructure> {
    build_invariant_with(m, k, RefineOptions::default())
}

pub fn build_invariant_with(m: &FiniteStructure, k: usize, opts: RefineOptions) -> Result<InvariantStructure> {
    let p = refine_joint(&[m], k, opts)?;
    Ok(InvariantStructure::from_partition(&p, 0, m.signature()))
}

impl InvariantStructure {
    /// Invariant of one structure of a refinement run. Classes are the colors
    /// realized by that structure, in color order.
    pub fn from_partition(p: &KTypePartition, structure: usize, signature: &Signature) -> Self {
        let k = p.k();
        let n = p.size_of(structure);
        let realized: Vec<u32> = p.realized(structure).into_iter().collect();
        let class_of: BTreeMap<u32, usize> = realized.iter().enumerate().map(|(i, &c)| (c, i + 1)).collect();
        let colors = p.colors_of(structure);
        let mut rep: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (idx, &c) in colors.iter().enumerate() {
            rep.entry(c).or_insert_with(|| crate::pebble::decode(idx, n, k));
        }
        let qf = realized.iter().map(|&c| p.qf_token(c).to_string()).collect();
        let mut perm = BTreeMap::new();
        for sigma in permutations(k) {
            let map = realized
                .iter()
                .map(|c| class_of[&p.color(structure, &apply_perm(&rep[c], &sigma))])
                .collect();
            perm.insert(sigma, map);
        }
        let mut acc = BTreeSet::new();
        for c in &realized {
            let mut t = rep[c].clone();
            for m in 0..n {
                t[0] = m;
                acc.insert((class_of[c], class_of[&p.color(structure, &t)]));
            }
        }
        InvariantStructure {
            k,
            signature: signature.clone(),
            qf,
            perm,
            acc,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn class_count(&self) -> usize {
        self.qf.len()
    }

    pub fn qf_token(&self, class: usize) -> &str {
        &self.qf[class - 1]
    }

    /// `perm_σ(class)`.
    pub fn perm(&self, sigma: &[usize], class: usize) -> usize {
        self.perm[sigma][class - 1]
    }

    pub fn perms(&self) -> &BTreeMap<Vec<usize>, Vec<usize>> {
        &self.perm
    }

    pub fn acc(&self) -> &BTreeSet<(usize, usize)> {
        &self.acc
    }

    pub fn acc_of(&self, class: usize) -> impl Iterator<Item = usize> + '_ {
        self.acc.range((class, 0)..(class + 1, 0)).map(|p| p.1)
    }

    /// Checks the structural laws: classes carry valid tokens, every `perm_σ`
    /// is a bijection compatible with the tokens, `perm_id = id`, and
    /// `perm_σ ∘ perm_τ = perm_{τ∘σ}`.
    pub fn check_laws(&self) -> std::result::Result<(), String> {
        let n = self.class_count();
        let id: Vec<usize> = (0..self.k).collect();
        if self.perm.get(&id).map(|m| m.iter().enumerate().all(|(i, &c)| c == i + 1)) != Some(true) {
            return Err("identity permutation does not act trivially".into());
        }
        for (sigma, map) in &self.perm {
            let img: BTreeSet<usize> = map.iter().copied().collect();
            if map.len() != n || img.len() != n || img.iter().any(|&c| c == 0 || c > n) {
                return Err(format!("perm {} is not a bijection of the classes", sigma_name(sigma)));
            }
            for c in 1..=n {
                let want = permute_token(&self.qf[c - 1], sigma, self.k, &self.signature);
                if self.qf[map[c - 1] - 1] != want {
                    return Err(format!("perm {} maps class {c} to a class of the wrong qf type", sigma_name(sigma)));
                }
            }
        }
        for (s, ms) in &self.perm {
            for (t, mt) in &self.perm {
                let ts = apply_perm(t, s);
                let composed = &self.perm[&ts];
                for c in 1..=n {
                    if ms[mt[c - 1] - 1] != composed[c - 1] {
                        return Err(format!(
                            "perm {} after perm {} differs from perm {} at class {c}",
                            sigma_name(s),
                            sigma_name(t),
                            sigma_name(&ts)
                        ));
                    }
                }
            }
        }
        for c in 1..=n {
            if self.acc_of(c).next().is_none() {
                return Err(format!("class {c} has no accessible class"));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, strip_comment(l).trim())).filter(|(_, l)| !l.is_empty());
        let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "empty invariant"))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|w| w.parse().map_err(|_| parse_err(hl, format!("bad header `{header}`"))))
            .collect::<Result<_>>()?;
        let [k, n] = nums[..] else {
            return Err(parse_err(hl, "header must be `<k> <N>`"));
        };
        if k == 0 {
            return Err(parse_err(hl, "k must be positive"));
        }
        let mut rels = Vec::new();
        let mut qf: Vec<Option<String>> = vec![None; n];
        let mut perm: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        let mut acc = BTreeSet::new();
        let class = |s: &str, line: usize| -> Result<usize> {
            match s.parse::<usize>() {
                Ok(c) if (1..=n).contains(&c) => Ok(c),
                _ => Err(parse_err(line, format!("class `{s}` out of range 1..={n}"))),
            }
        };
        for (ln, line) in lines {
            let words: Vec<&str> = line.split_whitespace().collect();
            match words[..] {
                ["rel", name, arity] => {
                    let a = arity.parse().map_err(|_| parse_err(ln, "bad arity"))?;
                    rels.push((name.to_string(), a));
                }
                ["class", c, "qf", token] => {
                    let c = class(c, ln)?;
                    if qf[c - 1].replace(token.to_string()).is_some() {
                        return Err(parse_err(ln, format!("class {c} declared twice")));
                    }
                }
                ["perm", s, i, j] => {
                    let sigma = parse_sigma(s, k, ln)?;
                    let (i, j) = (class(i, ln)?, class(j, ln)?);
                    let map = perm.entry(sigma).or_insert_with(|| vec![0; n]);
                    if map[i - 1] != 0 {
                        return Err(parse_err(ln, format!("perm {s} defined twice at class {i}")));
                    }
                    map[i - 1] = j;
                }
                ["acc", i, j] => {
                    acc.insert((class(i, ln)?, class(j, ln)?));
                }
                _ => return Err(parse_err(ln, format!("unrecognized line `{line}`"))),
            }
        }
        let signature = Signature::new(rels).map_err(|e| parse_err(1, e.to_string()))?;
        let qf: Vec<String> = qf
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.ok_or_else(|| parse_err(0, format!("class {} has no qf line", i + 1))))
            .collect::<Result<_>>()?;
        for t in &qf {
            validate_token(t, k, &signature).map_err(|m| parse_err(0, m))?;
        }
        let all = permutations(k);
        if perm.len() != all.len() || perm.values().any(|m| m.contains(&0)) {
            return Err(parse_err(0, "perm relation is not total on every permutation"));
        }
        let inv = InvariantStructure {
            k,
            signature,
            qf,
            perm,
            acc,
        };
        inv.check_laws().map_err(|m| parse_err(0, m))?;
        Ok(inv)
    }
}

/// Token of `ā∘σ` given the token of `ā`.
pub(crate) fn permute_token(token: &str, sigma: &[usize], k: usize, sig: &Signature) -> String {
    let pattern = crate::pebble::token_pattern(token);
    // a canonical witness tuple for the pattern
    let witness = apply_perm(&pattern, sigma);
    let mut out = String::new();
    let relabel = crate::pebble::token_pattern(&equality_token(&witness));
    for l in relabel {
        out.push(char::from_digit(l as u32, 36).expect("k <= 36"));
    }
    let bits: Vec<&str> = token.split('/').skip(1).collect();
    for (rel, (_, arity)) in sig.relations().iter().enumerate() {
        out.push('/');
        let src = bits[rel].as_bytes();
        crate::structure::for_each_index_tuple(k, *arity, |f| {
            // R(x_{σ f}) on ā is R(x_f) on ā∘σ
            let g: Vec<usize> = f.iter().map(|&i| sigma[i]).collect();
            out.push(src[crate::structure::encode(&g, k)] as char);
            true
        });
    }
    out
}

fn equality_token(tuple: &[usize]) -> String {
    let mut seen: Vec<usize> = Vec::new();
    let mut out = String::new();
    for &e in tuple {
        let label = match seen.iter().position(|&s| s == e) {
            Some(p) => p,
            None => {
                seen.push(e);
                seen.len() - 1
            }
        };
        out.push(char::from_digit(label as u32, 36).expect("k <= 36"));
    }
    out
}

pub(crate) fn validate_token(token: &str, k: usize, sig: &Signature) -> std::result::Result<(), String> {
    let parts: Vec<&str> = token.split('/').collect();
    if parts[0].len() != k || equality_token(&crate::pebble::token_pattern(parts[0])) != parts[0] {
        return Err(format!("bad equality pattern in `{token}`"));
    }
    if parts.len() != sig.len() + 1 {
        return Err(format!("token `{token}` does not match the signature"));
    }
    for (rel, bits) in parts[1..].iter().enumerate() {
        if bits.len() != k.pow(sig.arity(rel) as u32) || bits.bytes().any(|b| b != b'0' && b != b'1') {
            return Err(format!("bad bits for relation {} in `{token}`", sig.name(rel)));
        }
    }
    Ok(())
}

impl fmt::Display for InvariantStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.k, self.class_count());
        for (name, arity) in self.signature.relations() {
            let _ = writeln!(out, "rel {name} {arity}");
        }
        for (i, t) in self.qf.iter().enumerate() {
            let _ = writeln!(out, "class {} qf {t}", i + 1);
        }
        for (sigma, map) in &self.perm {
            for (i, j) in map.iter().enumerate() {
                let _ = writeln!(out, "perm {} {} {j}", sigma_name(sigma), i + 1);
            }
        }
        for (i, j) in &self.acc {
            let _ = writeln!(out, "acc {i} {j}");
        }
        f.write_str(&out)
    }
}

/// Component-wise equality of canonical forms.
pub fn invariants_equal(a: &InvariantStructure, b: &InvariantStructure) -> Result<bool> {
    if a.k != b.k {
        return Err(Error::KMismatch(a.k, b.k));
    }
    if a.signature != b.signature {
        return Err(Error::SignatureMismatch("invariants over different signatures".into()));
    }
    Ok(a == b)
}
