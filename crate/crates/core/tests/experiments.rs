mod common;

use causalmix::dataio::{CaseRecord, Dataset};
use causalmix::discovery::{intent_dataset, structure_posterior, HypothesisSet, ParameterPrior, PairHypothesis};
use causalmix::evalmetrics::gold_pair;
use causalmix::harness::{
    count_pair_types, emit_tables, evaluate_pair, run_grid, select_pairs, ExperimentConfig, Metric, PairCategory,
};
use causalmix::model::{CausalNetwork, ConfounderRule, Variable};
use causalmix::netio::read_network_file;
use causalmix::sampler::{case_rng, draw_manipulated_case, generate_mix, MixSpec};
use common::fixture;

fn strong_pair() -> CausalNetwork {
    CausalNetwork::from_rows(
        vec![Variable::binary("X"), Variable::binary("Y")],
        vec![vec![], vec![0]],
        vec![vec![vec![0.5, 0.5]], vec![vec![0.9, 0.1], vec![0.1, 0.9]]],
    )
    .unwrap()
}

fn pairwise(d: &Dataset) -> HypothesisSet {
    HypothesisSet::pairwise(d.variables()[0].clone(), d.variables()[1].clone()).unwrap()
}

#[test]
fn strong_experimental_mechanism_is_identified() {
    for seed in 0..5 {
        let d = generate_mix(&strong_pair(), &MixSpec { x: 0, y: 1, m: 500, n: 0, seed }).unwrap();
        let post = structure_posterior(&d, &pairwise(&d), ParameterPrior::default()).unwrap();
        assert!(post.probability(0) > 0.95, "seed {seed}: {:?}", post.probabilities);
    }
}

#[test]
fn intent_encoding_matches_deterministic_manipulation() {
    let net = strong_pair();
    for seed in 0..5 {
        let cases: Vec<CaseRecord> = (0..500)
            .map(|i| draw_manipulated_case(&net, 0, &mut case_rng(seed, i)).unwrap())
            .collect();
        let d = Dataset::new(net.structure().variables().to_vec(), cases).unwrap();
        let hyp = pairwise(&d);
        let direct = structure_posterior(&d, &hyp, ParameterPrior::default()).unwrap();

        let augmented = intent_dataset(&d, "X").unwrap();
        assert!(augmented.cases().iter().all(|c| c.manipulated.iter().all(|m| !m)));
        let aug_hyp = hyp.augment_intent("X").unwrap();
        let via_intent = structure_posterior(&augmented, &aug_hyp, ParameterPrior::default()).unwrap();
        for (a, b) in direct.probabilities.iter().zip(&via_intent.probabilities) {
            assert!((a - b).abs() <= 0.05, "seed {seed}: {direct:?} vs {via_intent:?}");
        }
    }
}

fn alarm() -> CausalNetwork {
    read_network_file(fixture("alarm.cbn")).unwrap()
}

#[test]
fn identification_improves_with_experimental_data() {
    let net = alarm();
    let s = net.structure();
    for (cause, effect) in [("ANAPHYLAXIS", "CATECHOL"), ("KINKEDTUBE", "SAO2"), ("INTUBATION", "PVSAT")] {
        let (x, y) = (s.id(cause).unwrap(), s.id(effect).unwrap());
        let pair = causalmix::harness::SampledPair {
            x,
            y,
            class: s.classify_pair(x, y, ConfounderRule::default()).unwrap(),
            truth: Some(PairHypothesis::XCausesY),
        };
        assert_eq!(pair.category(), Some(PairCategory::RelatedUnconfounded));
        let gold = gold_pair(&net, x, y).unwrap();
        let mean_truth = |m: usize| {
            (0..20)
                .map(|seed| 1.0 - evaluate_pair(&net, &pair, &gold, m, 0, seed).unwrap().serr)
                .sum::<f64>()
                / 20.0
        };
        let (p50, p500) = (mean_truth(50), mean_truth(500));
        assert!(p500 > p50, "{cause} -> {effect}: {p500} <= {p50}");
    }
}

#[test]
fn chain_fixture_has_three_related_unconfounded_pairs() {
    let net = read_network_file(fixture("chain.cbn")).unwrap();
    let c = count_pair_types(net.structure(), ConfounderRule::default()).unwrap();
    assert_eq!((c.related(), c.confounded()), (3, 0));
}

#[test]
fn zero_data_observational_error_for_related_pairs() {
    // Prior-only predictions are uniform, so the error reflects how far the
    // gold conditionals are from uniform.
    let mut cfg = ExperimentConfig::new(fixture("alarm.cbn"), "unused");
    cfg.pairs_per_category = Some(29);
    cfg.m_grid = vec![0];
    cfg.n_grid = vec![0];
    cfg.seed = 3;
    let net = alarm();
    let cells = causalmix::harness::run_grid_on(&net, &cfg).unwrap();
    let op = cells
        .iter()
        .find(|c| c.metric == Metric::Operr && c.category == PairCategory::RelatedUnconfounded)
        .unwrap();
    assert!((op.mean - 0.30).abs() <= 0.05, "OPErr at zero data = {}", op.mean);
    assert_eq!(select_pairs(&net, &cfg).unwrap().len(), 58);
}

#[test]
fn experiment_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let write = |sub: &str| {
        let mut cfg = ExperimentConfig::new(fixture("alarm.cbn"), dir.path().join(sub));
        cfg.pair_sample_size = 12;
        cfg.m_grid = vec![0, 20];
        cfg.n_grid = vec![0, 30];
        cfg.replications = 2;
        cfg.seed = 21;
        let paths = emit_tables(&run_grid(&cfg).unwrap(), &cfg.output_dir).unwrap();
        paths
            .iter()
            .map(|p| (p.file_name().unwrap().to_owned(), std::fs::read(p).unwrap()))
            .collect::<Vec<_>>()
    };
    let a = write("a");
    let b = write("b");
    assert_eq!(a, b);
    let names: Vec<String> = a.iter().map(|(n, _)| n.to_string_lossy().into_owned()).collect();
    for name in &names {
        assert!(name.ends_with("_related_unconfounded.csv") || name.ends_with("_unrelated_unconfounded.csv"));
    }
}

#[test]
fn default_grid_tables_are_five_by_five() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(fixture("alarm.cbn"), dir.path());
    cfg.pairs_per_category = Some(2);
    let paths = emit_tables(&run_grid(&cfg).unwrap(), dir.path()).unwrap();
    assert_eq!(paths.len(), 6);
    for p in paths {
        let text = std::fs::read_to_string(p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n\\m,0,50,100,300,500");
        assert_eq!(lines.len(), 6);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 6));
    }
}
