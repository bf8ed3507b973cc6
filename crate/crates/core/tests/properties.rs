mod common;

use causalmix::dataio::{parse_dataset, write_dataset};
use causalmix::discovery::{
    arc_probability, enumerate_dags, structure_posterior, Hypothesis, HypothesisSet, ModelAverage, ParameterPrior,
};
use causalmix::inference::Evidence;
use causalmix::model::{ConfounderRule, NetworkStructure};
use causalmix::netio::{parse_network, write_network};
use causalmix::scoring::{default_prior, log_marginal_likelihood, tally_counts, DirichletPrior};
use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_structure(r: &mut ChaCha8Rng, n: usize) -> NetworkStructure {
    let cards: Vec<usize> = (0..n).map(|_| r.random_range(2..=3)).collect();
    NetworkStructure::new(variables(&cards), random_parents(r, n, 0.4, 3)).unwrap()
}

fn lml(d: &causalmix::Dataset, s: &NetworkStructure, prior: &DirichletPrior) -> f64 {
    log_marginal_likelihood(&tally_counts(d, s).unwrap(), prior).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ancestors_match_transitive_closure(seed in any::<u64>(), n in 1usize..8) {
        let s = random_structure(&mut rng(seed), n);
        let mut reach = vec![vec![false; n]; n];
        for (from, to) in s.arcs() {
            reach[from][to] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        for v in 0..n {
            let want: Vec<usize> = (0..n).filter(|&a| reach[a][v]).collect();
            prop_assert_eq!(s.ancestors(v).unwrap().into_iter().collect::<Vec<_>>(), want);
            let want: Vec<usize> = (0..n).filter(|&d| reach[v][d]).collect();
            prop_assert_eq!(s.descendants(v).unwrap().into_iter().collect::<Vec<_>>(), want);
        }
    }

    #[test]
    fn pair_classification_is_symmetric(seed in any::<u64>(), n in 2usize..8) {
        let s = random_structure(&mut rng(seed), n);
        for x in 0..n {
            for y in (x + 1)..n {
                for rule in [ConfounderRule::ExclusivePaths, ConfounderRule::SharedAncestor] {
                    prop_assert_eq!(s.classify_pair(x, y, rule).unwrap(), s.classify_pair(y, x, rule).unwrap());
                }
                let strict = s.classify_pair(x, y, ConfounderRule::ExclusivePaths).unwrap();
                let loose = s.classify_pair(x, y, ConfounderRule::SharedAncestor).unwrap();
                prop_assert!(!strict.confounded || loose.confounded);
            }
        }
    }

    #[test]
    fn surgery_is_idempotent_and_commutes(seed in any::<u64>(), n in 2usize..6) {
        let mut r = rng(seed);
        let cards: Vec<usize> = (0..n).map(|_| r.random_range(2..=3)).collect();
        let net = random_network(&mut r, &cards, 0.5, 0.05);
        let a = (r.random_range(0..n), 0);
        let b = ((a.0 + 1) % n, cards[(a.0 + 1) % n] - 1);
        let once = net.surgery(&[a]).unwrap();
        prop_assert_eq!(&once.surgery(&[a]).unwrap(), &once);
        let ab = net.surgery(&[a, b]).unwrap();
        prop_assert_eq!(&net.surgery(&[b, a]).unwrap(), &ab);
        prop_assert_eq!(&once.surgery(&[b]).unwrap(), &ab);
    }

    #[test]
    fn score_ignores_case_order(seed in any::<u64>(), n in 1usize..5, len in 0usize..40) {
        let mut r = rng(seed);
        let s = random_structure(&mut r, n);
        let cards = cards_of(&s);
        let d = random_dataset(&mut r, &cards, len, 0.3);
        let mut cases = d.cases().to_vec();
        cases.shuffle(&mut r);
        let shuffled = causalmix::Dataset::new(d.variables().to_vec(), cases).unwrap();
        let prior = random_prior(&mut r, &s);
        let (a, b) = (lml(&d, &s, &prior), lml(&shuffled, &s, &prior));
        prop_assert!(rel_close(a, b, 1e-12) || (a - b).abs() < 1e-12);
    }

    #[test]
    fn markov_equivalent_structures_score_equally(seed in any::<u64>(), len in 0usize..80) {
        let mut r = rng(seed);
        let cards = [r.random_range(2..=4), r.random_range(2..=4), r.random_range(2..=3)];
        let d = random_dataset(&mut r, &cards, len, 0.0);
        let vars = d.variables().to_vec();
        let chain = NetworkStructure::new(vars.clone(), vec![vec![], vec![0], vec![1]]).unwrap();
        let reversed = NetworkStructure::new(vars.clone(), vec![vec![1], vec![2], vec![]]).unwrap();
        let fork = NetworkStructure::new(vars, vec![vec![1], vec![], vec![1]]).unwrap();
        let a = lml(&d, &chain, &default_prior(&chain));
        let b = lml(&d, &reversed, &default_prior(&reversed));
        let c = lml(&d, &fork, &default_prior(&fork));
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        prop_assert!((a - c).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn prequential_oracle_agrees(seed in any::<u64>(), n in 1usize..5, len in 0usize..50) {
        let mut r = rng(seed);
        let s = random_structure(&mut r, n);
        let d = random_dataset(&mut r, &cards_of(&s), len, 0.25);
        let prior = random_prior(&mut r, &s);
        let a = lml(&d, &s, &prior);
        let b = prequential_oracle(&d, &s, |i, j, k| prior.alpha(i, j, k));
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn inference_matches_enumeration(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let cards: Vec<usize> = (0..n).map(|_| r.random_range(2..=3)).collect();
        let net = random_network(&mut r, &cards, 0.5, 0.05);
        let t = r.random_range(0..n);
        let mut observed = Vec::new();
        let mut manip = Vec::new();
        let mut evidence = Vec::new();
        for v in (0..n).filter(|&v| v != t) {
            let k = r.random_range(0..cards[v]);
            match r.random_range(0..3) {
                0 => { observed.push((v, k)); evidence.push(Evidence::observed(v, k)); }
                1 => { manip.push((v, k)); evidence.push(Evidence::manipulated(v, k)); }
                _ => {}
            }
        }
        let got = causalmix::query(&net, &causalmix::Query::new(vec![t], evidence)).unwrap().probs;
        let want = brute_query(&net, &[t], &observed, &manip);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-9);
        }
    }

    #[test]
    fn network_text_round_trips(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let cards: Vec<usize> = (0..n).map(|_| r.random_range(2..=4)).collect();
        let net = random_network(&mut r, &cards, 0.5, 0.0);
        prop_assert_eq!(parse_network(&write_network(&net)).unwrap(), net);
    }

    #[test]
    fn dataset_text_round_trips(seed in any::<u64>(), len in 0usize..30) {
        let mut r = rng(seed);
        let cards: Vec<usize> = (0..r.random_range(1..5)).map(|_| r.random_range(2..=4)).collect();
        let d = random_dataset(&mut r, &cards, len, 0.3);
        prop_assert_eq!(parse_dataset(&write_dataset(&d)).unwrap(), d);
    }

    #[test]
    fn averaged_prediction_is_convex(seed in any::<u64>(), len in 0usize..60, manipulate in any::<bool>()) {
        let mut r = rng(seed);
        let cards = [r.random_range(2..=3), r.random_range(2..=3)];
        let d = random_dataset(&mut r, &cards, len, 0.3);
        let hyp = HypothesisSet::pairwise(d.variables()[0].clone(), d.variables()[1].clone()).unwrap();
        let avg = ModelAverage::fit(&d, &hyp, ParameterPrior::default()).unwrap();
        let k = r.random_range(0..cards[0]);
        let ev = if manipulate { Evidence::manipulated(0, k) } else { Evidence::observed(0, k) };
        let per = avg.per_structure(1, ev).unwrap();
        let pred = avg.predict(1, ev).unwrap();
        prop_assert!((pred.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        for (y, p) in pred.iter().enumerate() {
            let lo = per.iter().map(|d| d[y]).fold(f64::INFINITY, f64::min);
            let hi = per.iter().map(|d| d[y]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(*p >= lo - 1e-12 && *p <= hi + 1e-12);
        }
    }

    #[test]
    fn relabeling_swaps_h1_and_h2(seed in any::<u64>(), len in 0usize..60) {
        let mut r = rng(seed);
        let cards = [r.random_range(2..=3), r.random_range(2..=3)];
        let d = random_dataset(&mut r, &cards, len, 0.3);
        let swapped = d.with_columns_swapped(0, 1);
        let post = |d: &causalmix::Dataset| {
            let v = d.variables();
            let hyp = HypothesisSet::pairwise(v[0].clone(), v[1].clone()).unwrap();
            structure_posterior(d, &hyp, ParameterPrior::default()).unwrap().probabilities
        };
        let (a, b) = (post(&d), post(&swapped));
        prop_assert!((a[0] - b[1]).abs() <= 1e-9);
        prop_assert!((a[1] - b[0]).abs() <= 1e-9);
        prop_assert!((a[2] - b[2]).abs() <= 1e-9);
    }

    #[test]
    fn posterior_ignores_constant_prior_shift(seed in any::<u64>(), len in 0usize..40, shift in 0.0f64..5.0) {
        let mut r = rng(seed);
        let d = random_dataset(&mut r, &[2, 3], len, 0.3);
        let base = HypothesisSet::pairwise(d.variables()[0].clone(), d.variables()[1].clone()).unwrap();
        let shifted = HypothesisSet::new(
            base.hypotheses()
                .iter()
                .map(|h| Hypothesis { log_prior: h.log_prior - shift, ..h.clone() })
                .collect(),
        )
        .unwrap();
        let a = structure_posterior(&d, &base, ParameterPrior::default()).unwrap();
        let b = structure_posterior(&d, &shifted, ParameterPrior::default()).unwrap();
        prop_assert!((a.probabilities.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        for (p, q) in a.probabilities.iter().zip(&b.probabilities) {
            prop_assert!((0.0..=1.0).contains(p));
            prop_assert!((p - q).abs() <= 1e-12);
        }
    }
}

#[test]
fn arc_probability_matches_direct_sum_over_three_node_dags() {
    let mut r = rng(3);
    let d = random_dataset(&mut r, &[2, 2, 3], 40, 0.2);
    let dags = enumerate_dags(d.variables()).unwrap();
    assert_eq!(dags.len(), 25);
    let hyp = HypothesisSet::uniform(dags.clone()).unwrap();
    let post = structure_posterior(&d, &hyp, ParameterPrior::default()).unwrap();

    let weights: Vec<f64> = dags.iter().map(|s| lml(&d, s, &default_prior(s))).collect();
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = weights.iter().map(|w| (w - max).exp()).sum();
    for from in 0..3 {
        for to in (0..3).filter(|&t| t != from) {
            let direct: f64 = dags
                .iter()
                .zip(&weights)
                .filter(|(s, _)| s.parents(to).contains(&from))
                .map(|(_, w)| (w - max).exp() / total)
                .sum();
            assert!((arc_probability(&post, &hyp, from, to) - direct).abs() < 1e-12);
        }
    }
}

#[test]
fn dag_counts_match_brute_force_enumeration() {
    // Count acyclic digraphs by testing every subset of ordered pairs.
    for n in 1..=4 {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|(a, b)| a != b).collect();
        let brute = (0u32..1 << pairs.len())
            .filter(|mask| {
                let mut parents = vec![Vec::new(); n];
                for (i, &(a, b)) in pairs.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        parents[b].push(a);
                    }
                }
                NetworkStructure::new(variables(&vec![2; n]), parents).is_ok()
            })
            .count();
        assert_eq!(enumerate_dags(&variables(&vec![2; n])).unwrap().len(), brute);
    }
}
