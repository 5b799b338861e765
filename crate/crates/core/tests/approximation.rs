mod common;

use common::{random_case, rng, skewed_network};
use jtree_core::approx::{select_threshold_halving, select_threshold_sort};
use jtree_core::oracle::enumerate_joint;
use jtree_core::{
    approximate, check_case_admissible, compile, worst_case_bound, ApproximationConfig, BeliefTable, Case, Finding,
    Heuristic, Method, NetworkSpec, NodeSpec,
};
use proptest::prelude::*;

const EPSILONS: [f64; 4] = [1e-4, 1e-3, 5e-3, 1e-2];
const SLACK: f64 = 1e-12;

fn methods() -> [Method; 2] {
    [Method::Halving, Method::SortExact]
}

#[test]
fn global_error_matches_surviving_mass() {
    let mut nontrivial = 0;
    for seed in 0..40u64 {
        let net = skewed_network(seed, 4 + seed as usize % 6, 4, 3, 0.1, 3.0);
        let joint = enumerate_joint(&net).unwrap();
        let exact = compile(&net, Heuristic::MinSize, 0).unwrap();
        for method in methods() {
            for eps in EPSILONS {
                let cfg = ApproximationConfig::new(eps, method).unwrap();
                let (_, report) = approximate(&exact, &cfg).unwrap();
                assert!(report.within_local_budget(), "seed {seed} {eps}");
                let cutoffs: Vec<f64> = report.cliques.iter().map(|r| r.cutoff).collect();
                let kept = joint.survivors(&exact, &cutoffs).total();
                assert!((report.global_error - (1.0 - kept)).abs() <= 1e-9, "seed {seed} {method:?} {eps}");
                if report.global_error > 0.0 {
                    nontrivial += 1;
                }
            }
        }
    }
    assert!(nontrivial > 50, "only {nontrivial} runs annihilated anything");
}

#[test]
fn bounds_are_sound() {
    let mut trials = 0;
    for seed in 0..30u64 {
        let net = skewed_network(seed, 5 + seed as usize % 5, 3, 3, 0.1, 3.0);
        let joint = enumerate_joint(&net).unwrap();
        let exact = compile(&net, Heuristic::MinWeight, 0).unwrap();
        let mut r = rng(seed);
        let cases: Vec<Case> = (0..4).map(|_| random_case(&mut r, &net, 3)).collect();
        for eps in EPSILONS {
            let cfg = ApproximationConfig::new(eps, Method::Halving).unwrap();
            let (approx, report) = approximate(&exact, &cfg).unwrap();
            for case in &cases {
                if joint.evidence_probability(case) == 0.0 {
                    continue;
                }
                let mut jt = approx.clone();
                jt.enter_case(case).unwrap();
                let out = jt.propagate().unwrap();
                let bound = worst_case_bound(&report, case, out.normalization);
                if out.excluded {
                    assert!(bound.excluded && bound.coarse == 1.0);
                    continue;
                }
                assert!(bound.refined <= bound.coarse);
                for v in 0..net.len() {
                    let want = joint.posterior(case, v).unwrap();
                    let got = jt.marginal(v).unwrap();
                    for (a, b) in want.iter().zip(&got) {
                        assert!((a - b).abs() <= bound.refined + SLACK, "seed {seed} eps {eps} node {v}");
                    }
                }
                trials += 1;
            }
        }
    }
    assert!(trials > 200);
}

#[test]
fn sort_method_error_grows_with_epsilon() {
    for seed in 0..20u64 {
        let net = skewed_network(seed, 8, 3, 3, 0.1, 3.0);
        let exact = compile(&net, Heuristic::MinSize, 0).unwrap();
        let mut last = 0.0;
        for eps in [0.0, 1e-4, 1e-3, 1e-2, 5e-2, 0.1] {
            let cfg = ApproximationConfig::new(eps, Method::SortExact).unwrap();
            let (_, report) = approximate(&exact, &cfg).unwrap();
            assert!(report.global_error >= last, "seed {seed} eps {eps}");
            last = report.global_error;
        }
    }
}

#[test]
fn halving_is_not_monotone_in_epsilon() {
    let t = BeliefTable::from_dense(vec![0], vec![3], vec![0.09, 0.12, 0.79]).unwrap();
    assert!((select_threshold_halving(&t, 0.1).removed - 0.09).abs() < 1e-15);
    let wider = select_threshold_halving(&t, 0.15);
    assert_eq!(wider.delta, 0.075);
    assert_eq!(wider.removed, 0.0);
    let sort = select_threshold_sort(&t, 0.15);
    assert!((sort.removed - 0.09).abs() < 1e-15);
}

#[test]
fn exclusion_matches_surviving_support() {
    for seed in 50..80u64 {
        let net = skewed_network(seed, 7, 3, 3, 0.1, 4.0);
        let joint = enumerate_joint(&net).unwrap();
        let exact = compile(&net, Heuristic::MaxCardinality, 0).unwrap();
        let cfg = ApproximationConfig::new(0.05, Method::SortExact).unwrap();
        let (approx, report) = approximate(&exact, &cfg).unwrap();
        let cutoffs: Vec<f64> = report.cliques.iter().map(|r| r.cutoff).collect();
        let surviving = joint.survivors(&exact, &cutoffs);
        let mut r = rng(seed);
        for _ in 0..10 {
            let case = random_case(&mut r, &net, 3);
            let out = check_case_admissible(&approx, &case).unwrap();
            assert_eq!(out.excluded, surviving.evidence_probability(&case) == 0.0, "seed {seed}");
        }
    }
}

fn all_removed_chain() -> NetworkSpec {
    let mut c_row_false = vec![0.05; 20];
    c_row_false[19] = 1.0 - 0.05 * 19.0;
    let mut c_row_true = vec![0.0; 20];
    c_row_true[0] = 1.0;
    NetworkSpec::new(
        "all-removed",
        vec![
            NodeSpec::new("A", ["t", "f"], [] as [&str; 0], vec![0.5, 0.5]),
            NodeSpec::new("B", ["t", "f"], ["A"], vec![0.05, 0.95, 0.05, 0.95]),
            NodeSpec::new("C", (0..20).map(|s| format!("c{s}")), ["B"], [c_row_true, c_row_false].concat()),
        ],
    )
}

#[test]
fn whole_support_annihilated() {
    let net = all_removed_chain();
    let exact = compile(&net, Heuristic::MinSize, 0).unwrap();
    let cfg = ApproximationConfig::new(0.96, Method::SortExact).unwrap();
    let (approx, report) = approximate(&exact, &cfg).unwrap();
    assert!(report.within_local_budget());
    assert_eq!(report.global_error, 1.0);
    for case in
        [Case::new(), Case::from_findings([Finding::single(0, 0)]), Case::from_findings([Finding::single(2, 0)])]
    {
        let out = check_case_admissible(&approx, &case).unwrap();
        assert!(out.excluded);
        assert_eq!(out.normalization, 0.0);
        assert!(worst_case_bound(&report, &case, out.normalization).excluded);
    }
}

#[test]
fn approximated_tree_is_compressed() {
    let net = skewed_network(5, 9, 4, 3, 0.5, 3.0);
    let exact = compile(&net, Heuristic::MinSize, 0).unwrap();
    let cfg = ApproximationConfig::new(1e-2, Method::Halving).unwrap();
    let (approx, _) = approximate(&exact, &cfg).unwrap();
    assert!(approx.payload_bytes() <= exact.dense_bytes());
    for c in approx.cliques() {
        assert_eq!(c.table.is_sparse(), 2 * c.table.nnz() <= c.table.len());
    }
}

fn positive_table() -> impl Strategy<Value = BeliefTable> {
    proptest::collection::vec(prop_oneof![1 => Just(0.0), 1 => Just(0.125), 3 => 0.0..1.0f64], 1..40)
        .prop_map(|v| BeliefTable::from_dense(vec![0], vec![v.len()], v).unwrap())
}

proptest! {
    #[test]
    fn thresholds_stay_within_budget(t in positive_table(), eps in 0.0..0.99f64) {
        for th in [select_threshold_halving(&t, eps), select_threshold_sort(&t, eps)] {
            let (kept, removed) = t.annihilate_below(th.cutoff);
            prop_assert_eq!(removed.to_bits(), th.removed.to_bits());
            prop_assert!(removed <= eps * t.sum());
            prop_assert!(kept.nonzeros().all(|(_, x)| x >= th.cutoff));
        }
    }

    #[test]
    fn sort_removal_is_nested(t in positive_table(), a in 0.0..0.99f64, b in 0.0..0.99f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = select_threshold_sort(&t, lo);
        let large = select_threshold_sort(&t, hi);
        prop_assert!(small.cutoff <= large.cutoff || small.removed == large.removed);
        prop_assert!(small.removed <= large.removed);
    }

    #[test]
    fn sort_takes_equal_values_together(t in positive_table(), eps in 0.0..0.99f64) {
        let th = select_threshold_sort(&t, eps);
        let values = t.to_dense_values();
        let removed: Vec<f64> = values.iter().copied().filter(|&x| x > 0.0 && x < th.cutoff).collect();
        for r in removed {
            prop_assert!(values.iter().filter(|&&x| x == r).all(|&x| x < th.cutoff));
        }
    }
}
