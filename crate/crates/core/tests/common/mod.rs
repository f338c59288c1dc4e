//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use folreward::syntax::{AtomicUnit, BinOp, FolExpr, Quantifier};
use rand::seq::SliceRandom;
use rand::Rng;

pub const PREDICATES: [&str; 8] = ["Human", "Mortal", "Animal", "Person", "Dog", "Wise", "Teacher", "Student"];
pub const OPS: [BinOp; 5] = [BinOp::And, BinOp::Or, BinOp::Implies, BinOp::Iff, BinOp::Xor];

/// Random formula over at most `max_atoms` distinct atoms `Name(x)` with
/// tree depth at most `max_depth`.
pub fn random_formula<R: Rng>(rng: &mut R, max_atoms: usize, max_depth: usize) -> FolExpr {
    let mut names: Vec<&str> = PREDICATES.to_vec();
    names.shuffle(rng);
    let pool: Vec<FolExpr> = names[..rng.random_range(1..=max_atoms)].iter().map(|n| FolExpr::atom(n, &["x"])).collect();
    let body = grow(rng, &pool, max_depth.saturating_sub(1).max(1));
    if max_depth > 1 && rng.random_bool(0.5) {
        let q = if rng.random_bool(0.5) { Quantifier::Forall } else { Quantifier::Exists };
        FolExpr::quantified(q, "x", body)
    } else {
        body
    }
}

fn grow<R: Rng>(rng: &mut R, pool: &[FolExpr], depth: usize) -> FolExpr {
    if depth <= 1 || rng.random_bool(0.25) {
        return pool[rng.random_range(0..pool.len())].clone();
    }
    if rng.random_bool(0.2) {
        return FolExpr::not(grow(rng, pool, depth - 1));
    }
    let op = OPS[rng.random_range(0..OPS.len())];
    FolExpr::binary(op, grow(rng, pool, depth - 1), grow(rng, pool, depth - 1))
}

/// Row-by-row truth-table agreement using `eval_propositional`. `pairs`
/// maps prediction atom indices to reference atom indices; every other
/// prediction atom is an independent variable.
pub fn oracle_score(pred: &FolExpr, reference: &FolExpr, pairs: &[(usize, usize)]) -> f64 {
    let pa = pred.atoms();
    let ra = reference.atoms();
    let mut names: Vec<String> = ra.iter().map(|a| a.canonical_text.clone()).collect();
    let mut rename = HashMap::new();
    for (i, a) in pa.iter().enumerate() {
        let target = match pairs.iter().find(|(p, _)| *p == i) {
            Some((_, r)) => ra[*r].canonical_text.clone(),
            None => {
                let fresh = format!("#fresh{i}");
                names.push(fresh.clone());
                fresh
            }
        };
        rename.insert(a.canonical_text.clone(), target);
    }
    let n = names.len();
    let mut agree = 0u64;
    for row in 0..(1u64 << n) {
        let value_of = |name: &str| {
            let k = names.iter().position(|x| x == name).expect("known variable");
            (row >> k) & 1 == 1
        };
        let p = pred.eval_propositional(&|t: &str| value_of(&rename[t]));
        let r = reference.eval_propositional(&|t: &str| value_of(t));
        if p == r {
            agree += 1;
        }
    }
    agree as f64 / (1u64 << n) as f64
}

/// Every total injective map from the smaller atom set into the larger,
/// as (prediction index, reference index) pairs.
pub fn all_injective_matchings(np: usize, nr: usize) -> Vec<Vec<(usize, usize)>> {
    fn arrangements(k: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for c in 0..n {
            if !cur.contains(&c) {
                cur.push(c);
                arrangements(k, n, cur, out);
                cur.pop();
            }
        }
    }
    let mut raw = Vec::new();
    arrangements(np.min(nr), np.max(nr), &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|a| {
            a.into_iter()
                .enumerate()
                .map(|(i, c)| if np <= nr { (i, c) } else { (c, i) })
                .collect()
        })
        .collect()
}

/// Full-matrix edit distance.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

pub fn summed_distance(pa: &[AtomicUnit], ra: &[AtomicUnit], pairs: &[(usize, usize)]) -> usize {
    pairs.iter().map(|&(p, r)| edit_distance(&pa[p].canonical_text, &ra[r].canonical_text)).sum()
}

/// Renames predicates by a mild spelling change so names stay similar.
pub fn perturb_predicates<R: Rng>(expr: &FolExpr, rng: &mut R) -> FolExpr {
    let mut map = HashMap::new();
    for a in expr.atoms() {
        let new_name = match rng.random_range(0..4) {
            0 => a.predicate.clone(),
            1 => format!("{}s", a.predicate),
            2 => format!("{}_", a.predicate),
            _ => format!("Is{}", a.predicate),
        };
        let args: Vec<&str> = a.args.iter().map(String::as_str).collect();
        map.insert(a.canonical_text.clone(), FolExpr::atom(&new_name, &args));
    }
    expr.map_atoms(&map)
}
