use jtree::synth::{generate_synthetic, SynthParams};
use jtree::Error;
use proptest::prelude::*;

#[test]
fn single_node() {
    let net = generate_synthetic(&SynthParams { nodes: 1, max_parents: 0, ..SynthParams::default() }).unwrap();
    assert_eq!(net.len(), 1);
    assert!(net.nodes[0].parents.is_empty());
    assert!(net.validate().is_valid());
}

#[test]
fn deterministic_per_seed() {
    let p = SynthParams { seed: 9, ..SynthParams::default() };
    assert_eq!(generate_synthetic(&p).unwrap(), generate_synthetic(&p).unwrap());
    let q = SynthParams { seed: 10, ..p.clone() };
    assert_ne!(generate_synthetic(&p).unwrap(), generate_synthetic(&q).unwrap());
}

#[test]
fn hits_the_zero_fraction() {
    for seed in 0..5 {
        let net = generate_synthetic(&SynthParams { nodes: 57, seed, ..SynthParams::default() }).unwrap();
        let report = net.validate();
        assert!(report.is_valid());
        let expected = (0.67 * report.parameter_count as f64).round() as usize;
        assert_eq!(report.zero_count, expected);
        assert!((report.zero_fraction() - 0.67).abs() < 1e-3);
    }
}

#[test]
fn caps_zeros_at_one_nonzero_per_row() {
    let p = SynthParams { nodes: 10, min_states: 2, max_states: 2, zero_fraction: 0.9, ..SynthParams::default() };
    let net = generate_synthetic(&p).unwrap();
    let report = net.validate();
    assert!(report.is_valid());
    assert_eq!(report.zero_count * 2, report.parameter_count);
}

#[test]
fn parents_respect_the_window() {
    let p = SynthParams { nodes: 40, window: Some(3), ..SynthParams::default() };
    let net = generate_synthetic(&p).unwrap();
    for (i, n) in net.nodes.iter().enumerate() {
        assert!(n.parents.len() <= p.max_parents);
        for parent in &n.parents {
            let j = net.node_index(parent).unwrap();
            assert!(j < i && i - j <= 3);
        }
    }
}

#[test]
fn rejects_bad_parameters() {
    let base = SynthParams::default();
    for bad in [
        SynthParams { nodes: 0, ..base.clone() },
        SynthParams { nodes: 3, max_parents: 3, ..base.clone() },
        SynthParams { min_states: 1, ..base.clone() },
        SynthParams { min_states: 5, max_states: 4, ..base.clone() },
        SynthParams { alpha: 0.0, ..base.clone() },
        SynthParams { zero_fraction: 1.0, ..base.clone() },
        SynthParams { window: Some(0), ..base.clone() },
    ] {
        let err = generate_synthetic(&bad).unwrap_err();
        assert!(matches!(err, Error::Generator(_)));
        assert_eq!(err.exit_code(), 2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_networks_validate(
        nodes in 1usize..30,
        k in 0usize..4,
        lo in 2usize..5,
        extra in 0usize..3,
        alpha in 0.05..3.0f64,
        zf in 0.0..0.95f64,
        seed in any::<u64>(),
    ) {
        let p = SynthParams {
            nodes,
            max_parents: k.min(nodes - 1),
            min_states: lo,
            max_states: lo + extra,
            alpha,
            zero_fraction: zf,
            window: None,
            seed,
        };
        let net = generate_synthetic(&p).unwrap();
        let report = net.validate();
        prop_assert!(report.is_valid(), "{:?}", report.violations);
    }
}
