//! Random model generators and brute-force oracles shared by the
//! integration tests. Nothing here calls the library's inference, scoring
//! or surgery code.

#![allow(dead_code)]

use std::path::PathBuf;

use causalmix::dataio::{CaseRecord, Dataset};
use causalmix::model::{CausalNetwork, NetworkStructure, VarId, Variable};
use causalmix::scoring::DirichletPrior;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn variables(cards: &[usize]) -> Vec<Variable> {
    cards
        .iter()
        .enumerate()
        .map(|(i, &r)| Variable::new(format!("V{i}"), (0..r).map(|k| format!("s{k}"))).unwrap())
        .collect()
}

/// Random DAG: a shuffled node order with each forward arc present with
/// probability `density`, at most `max_parents` per node.
pub fn random_parents<R: Rng>(rng: &mut R, n: usize, density: f64, max_parents: usize) -> Vec<Vec<VarId>> {
    let mut order: Vec<VarId> = (0..n).collect();
    order.shuffle(rng);
    let mut parents = vec![Vec::new(); n];
    for (pos, &child) in order.iter().enumerate() {
        let mut cands: Vec<VarId> = order[..pos].to_vec();
        cands.shuffle(rng);
        for p in cands {
            if parents[child].len() < max_parents && rng.random_bool(density) {
                parents[child].push(p);
            }
        }
    }
    parents
}

/// Row drawn uniformly from `[floor, 1]` per entry, then normalized.
pub fn random_row<R: Rng>(rng: &mut R, r: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..r).map(|_| rng.random_range(floor..=1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

pub fn random_network<R: Rng>(rng: &mut R, cards: &[usize], density: f64, floor: f64) -> CausalNetwork {
    let n = cards.len();
    let parents = random_parents(rng, n, density, 3);
    let cpts = (0..n)
        .map(|i| {
            let q: usize = parents[i].iter().map(|&p| cards[p]).product();
            (0..q).map(|_| random_row(rng, cards[i], floor)).collect()
        })
        .collect();
    CausalNetwork::from_rows(variables(cards), parents, cpts).unwrap()
}

/// Row index of `node` given a full assignment, first parent slowest.
pub fn row_index(s: &NetworkStructure, node: VarId, values: &[usize]) -> usize {
    s.parents(node)
        .iter()
        .fold(0, |j, &p| j * s.cardinality(p) + values[p])
}

/// Every full assignment, last variable fastest.
pub fn assignments(cards: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &r in cards {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..r).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    out
}

pub fn cards_of(s: &NetworkStructure) -> Vec<usize> {
    (0..s.len()).map(|i| s.cardinality(i)).collect()
}

/// Truncated factorization: product of CPT terms of unmanipulated nodes,
/// zero unless each manipulated node holds its forced state.
pub fn intervened_joint(net: &CausalNetwork, manip: &[(VarId, usize)], values: &[usize]) -> f64 {
    let s = net.structure();
    let mut p = 1.0;
    for i in 0..s.len() {
        match manip.iter().find(|&&(v, _)| v == i) {
            Some(&(_, k)) => {
                if values[i] != k {
                    return 0.0;
                }
            }
            None => p *= net.cpt(i).row(row_index(s, i, values))[values[i]],
        }
    }
    p
}

/// `P(targets | observed, do(manip))` by summing the full joint.
pub fn brute_query(
    net: &CausalNetwork,
    targets: &[VarId],
    observed: &[(VarId, usize)],
    manip: &[(VarId, usize)],
) -> Vec<f64> {
    let s = net.structure();
    let cards = cards_of(s);
    let size: usize = targets.iter().map(|&t| cards[t]).product();
    let mut out = vec![0.0; size];
    for a in assignments(&cards) {
        if observed.iter().any(|&(v, k)| a[v] != k) {
            continue;
        }
        let p = intervened_joint(net, manip, &a);
        let idx = targets.iter().fold(0, |acc, &t| acc * cards[t] + a[t]);
        out[idx] += p;
    }
    let total: f64 = out.iter().sum();
    out.into_iter().map(|x| x / total).collect()
}

pub fn random_dataset<R: Rng>(rng: &mut R, cards: &[usize], len: usize, manip_rate: f64) -> Dataset {
    let cases = (0..len)
        .map(|_| CaseRecord {
            values: cards.iter().map(|&r| rng.random_range(0..r)).collect(),
            manipulated: cards.iter().map(|_| rng.random_bool(manip_rate)).collect(),
        })
        .collect();
    Dataset::new(variables(cards), cases).unwrap()
}

/// Sequential predictive log score: each unmanipulated cell is predicted
/// from the counts of the cases before it.
pub fn prequential_oracle(d: &Dataset, s: &NetworkStructure, alpha: impl Fn(VarId, usize, usize) -> f64) -> f64 {
    let n = s.len();
    let mut counts: Vec<std::collections::HashMap<(usize, usize), f64>> = vec![Default::default(); n];
    let mut total = 0.0;
    for c in d.cases() {
        for i in 0..n {
            if c.manipulated[i] {
                continue;
            }
            let j = row_index(s, i, &c.values);
            let r = s.cardinality(i);
            let a_ij: f64 = (0..r).map(|k| alpha(i, j, k)).sum();
            let n_ij: f64 = (0..r).map(|k| counts[i].get(&(j, k)).copied().unwrap_or(0.0)).sum();
            let k = c.values[i];
            let n_ijk = counts[i].get(&(j, k)).copied().unwrap_or(0.0);
            total += ((alpha(i, j, k) + n_ijk) / (a_ij + n_ij)).ln();
            *counts[i].entry((j, k)).or_insert(0.0) += 1.0;
        }
    }
    total
}

/// Random positive Dirichlet parameters for every node.
pub fn random_prior<R: Rng>(rng: &mut R, s: &NetworkStructure) -> DirichletPrior {
    let tables = (0..s.len())
        .map(|i| {
            let q: usize = s.parents(i).iter().map(|&p| s.cardinality(p)).product();
            (0..q * s.cardinality(i)).map(|_| rng.random_range(0.05..3.0)).collect()
        })
        .collect();
    DirichletPrior::new(s, tables).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}
