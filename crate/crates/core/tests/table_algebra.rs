use jtree_core::{BeliefTable, Finding};
use proptest::prelude::*;

/// A table over up to four distinct nodes drawn from 0..6, about a third of
/// its entries exact zeros.
fn table_strategy() -> impl Strategy<Value = BeliefTable> {
    (proptest::sample::subsequence((0usize..6).collect::<Vec<_>>(), 0..=4), any::<u64>())
        .prop_flat_map(|(mut scope, shuffle)| {
            // Vary the scope order too.
            let len = scope.len();
            if len > 1 {
                scope.rotate_left((shuffle as usize) % len);
            }
            let shape: Vec<usize> = scope.iter().map(|&n| 2 + n % 3).collect();
            let size: usize = shape.iter().product();
            (Just(scope), Just(shape), proptest::collection::vec(prop_oneof![1 => Just(0.0), 2 => 0.0..1.0f64], size))
        })
        .prop_map(|(scope, shape, values)| BeliefTable::from_dense(scope, shape, values).unwrap())
}

fn shape_of(node: usize) -> usize {
    2 + node % 3
}

fn sub_table(t: &BeliefTable, pick: &[bool], seed: &[f64]) -> BeliefTable {
    let scope: Vec<usize> = t.scope().iter().copied().zip(pick.iter().cycle()).filter(|e| *e.1).map(|e| e.0).collect();
    let shape: Vec<usize> = scope.iter().map(|&n| shape_of(n)).collect();
    let size: usize = shape.iter().product();
    let values = (0..size).map(|i| seed[i % seed.len()]).collect();
    BeliefTable::from_dense(scope, shape, values).unwrap()
}

fn approx_eq(a: &BeliefTable, b: &BeliefTable, tol: f64) -> bool {
    let (x, y) = (a.to_dense_values(), b.to_dense_values());
    a.scope() == b.scope() && x.iter().zip(&y).all(|(p, q)| (p - q).abs() <= tol * p.abs().max(q.abs()).max(1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn marginalization_preserves_mass(t in table_strategy(), pick in proptest::collection::vec(any::<bool>(), 4)) {
        let keep: Vec<usize> = t.scope().iter().copied().zip(pick.iter().cycle()).filter(|e| *e.1).map(|e| e.0).collect();
        let m = t.marginalize(&keep).unwrap();
        let (a, b) = (t.sum(), m.sum());
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    }

    #[test]
    fn multiplication_distributes_over_marginalization(
        t in table_strategy(),
        pick in proptest::collection::vec(any::<bool>(), 4),
        upick in proptest::collection::vec(any::<bool>(), 4),
        seed in proptest::collection::vec(0.0..2.0f64, 1..8),
    ) {
        let keep: Vec<usize> = t.scope().iter().copied().zip(pick.iter().cycle()).filter(|e| *e.1).map(|e| e.0).collect();
        let kept = t.marginalize(&keep).unwrap();
        // u's scope is a subset of keep
        let u = sub_table(&kept, &upick, &seed);
        let lhs = t.multiply(&u).unwrap().marginalize(&keep).unwrap();
        let rhs = kept.multiply(&u).unwrap();
        prop_assert!(approx_eq(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn sparse_matches_dense_bitwise(
        t in table_strategy(),
        pick in proptest::collection::vec(any::<bool>(), 4),
        seed in proptest::collection::vec(0.0..2.0f64, 1..8),
        delta in 0.0..0.6f64,
        state in 0usize..2,
    ) {
        let s = BeliefTable::from_sparse(t.scope().to_vec(), t.shape().to_vec(), t.nonzeros().collect()).unwrap();
        prop_assert!(s.is_sparse());
        let keep: Vec<usize> = t.scope().iter().copied().zip(pick.iter().cycle()).filter(|e| *e.1).map(|e| e.0).collect();
        prop_assert!(t.marginalize(&keep).unwrap().same_values(&s.marginalize(&keep).unwrap()));

        let u = sub_table(&t, &pick, &seed);
        let us = u.compress();
        for (a, b) in [(&t, &u), (&s, &u), (&t, &us), (&s, &us)] {
            prop_assert!(a.multiply(b).unwrap().same_values(&t.multiply(&u).unwrap()));
        }

        let den = t.marginalize(t.scope()).unwrap();
        prop_assert!(t.divide(&den).unwrap().same_values(&s.divide(&den.compress()).unwrap()));

        if let Some(&node) = t.scope().first() {
            let f = Finding::single(node, state);
            prop_assert!(t.enter_finding(&f).unwrap().same_values(&s.enter_finding(&f).unwrap()));
        }

        let (a, ra) = t.annihilate_below(delta);
        let (b, rb) = s.annihilate_below(delta);
        prop_assert!(a.same_values(&b));
        prop_assert_eq!(ra.to_bits(), rb.to_bits());
        prop_assert_eq!(t.sum().to_bits(), s.sum().to_bits());
        prop_assert!(t.compress().same_values(&t));
        prop_assert_eq!(t.compress().decompress(), t.clone());
    }

    #[test]
    fn annihilation_conserves_mass(t in table_strategy(), delta in 0.0..1.0f64) {
        let (a, removed) = t.annihilate_below(delta);
        let total = t.sum();
        prop_assert!((removed + a.sum() - total).abs() <= 1e-12 * total.max(1e-300));
        prop_assert!(a.nonzeros().all(|(_, x)| x >= delta));
    }

    #[test]
    fn findings_commute(t in table_strategy(), s1 in 0usize..2, s2 in 0usize..2) {
        if t.scope().len() >= 2 {
            let f = Finding::single(t.scope()[0], s1);
            let g = Finding::single(t.scope()[1], s2);
            let ab = t.enter_finding(&f).unwrap().enter_finding(&g).unwrap();
            let ba = t.enter_finding(&g).unwrap().enter_finding(&f).unwrap();
            prop_assert!(ab.same_values(&ba));
        }
    }

    #[test]
    fn compression_threshold(t in table_strategy()) {
        let c = t.compress();
        prop_assert_eq!(c.is_sparse(), 2 * t.nnz() <= t.len());
        prop_assert!(c.payload_bytes() <= t.payload_bytes());
    }
}
