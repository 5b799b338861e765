mod common;

use std::collections::BTreeSet;

use common::random_network;
use jtree_core::graph::{self, extract_cliques, moralize, triangulate_from, UndirectedGraph};
use jtree_core::{compile, Heuristic, JunctionTree};

/// Chordality by repeatedly deleting a simplicial vertex.
fn chordal_by_simplicial_elimination(g: &UndirectedGraph) -> bool {
    let n = g.vertex_count();
    let mut alive: BTreeSet<usize> = (0..n).collect();
    while !alive.is_empty() {
        let simplicial = alive.iter().copied().find(|&v| {
            let ns: Vec<usize> = g.neighbors(v).iter().copied().filter(|w| alive.contains(w)).collect();
            ns.iter().enumerate().all(|(i, &a)| ns[i + 1..].iter().all(|&b| g.has_edge(a, b)))
        });
        match simplicial {
            Some(v) => {
                alive.remove(&v);
            }
            None => return false,
        }
    }
    true
}

/// Every maximal clique of a small graph by subset enumeration.
fn maximal_cliques_brute(g: &UndirectedGraph) -> BTreeSet<Vec<usize>> {
    let n = g.vertex_count();
    let mut cliques = Vec::new();
    for mask in 1u32..(1 << n) {
        let vs: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
        if vs.iter().enumerate().all(|(i, &a)| vs[i + 1..].iter().all(|&b| g.has_edge(a, b))) {
            cliques.push(mask);
        }
    }
    cliques
        .iter()
        .filter(|&&m| !cliques.iter().any(|&o| o != m && o & m == m))
        .map(|&m| (0..n).filter(|&v| m & (1 << v) != 0).collect())
        .collect()
}

/// Junction property checked pairwise along tree paths.
fn junction_property_by_paths(jt: &JunctionTree) -> bool {
    let k = jt.cliques().len();
    let path = |from: usize, to: usize| -> Vec<usize> {
        let mut prev = vec![usize::MAX; k];
        prev[from] = from;
        let mut queue = std::collections::VecDeque::from([from]);
        while let Some(c) = queue.pop_front() {
            for &(nb, _) in jt.neighbors(c) {
                if prev[nb] == usize::MAX {
                    prev[nb] = c;
                    queue.push_back(nb);
                }
            }
        }
        let mut p = vec![to];
        let mut c = to;
        while c != from {
            c = prev[c];
            p.push(c);
        }
        p
    };
    for u in 0..k {
        for v in u + 1..k {
            let a = &jt.cliques()[u].nodes;
            let b = &jt.cliques()[v].nodes;
            let shared: Vec<usize> = a.iter().copied().filter(|x| b.contains(x)).collect();
            for c in path(u, v) {
                if !shared.iter().all(|x| jt.cliques()[c].nodes.contains(x)) {
                    return false;
                }
            }
        }
    }
    true
}

#[test]
fn triangulations_are_chordal_and_cliques_maximal() {
    for seed in 0..80u64 {
        let net = random_network(seed, 3 + seed as usize % 10, 4, 3, 0.0);
        let moral = moralize(&net).unwrap();
        let cards = net.cardinalities();
        for h in Heuristic::ALL {
            for start in [0, net.len() - 1] {
                let tr = triangulate_from(&moral, &cards, h, start);
                let filled = tr.filled(&moral);
                assert!(chordal_by_simplicial_elimination(&filled), "seed {seed} {h}");
                assert!(graph::is_chordal(&filled));
                let t2 = triangulate_from(&filled, &cards, Heuristic::MaxCardinality, 0);
                assert!(t2.fill_in.is_empty());
                let got: BTreeSet<Vec<usize>> = extract_cliques(&tr, &moral).into_iter().collect();
                assert_eq!(got, maximal_cliques_brute(&filled), "seed {seed} {h}");
            }
        }
    }
}

#[test]
fn every_tree_has_the_junction_property() {
    for seed in 0..80u64 {
        let net = random_network(seed, 3 + seed as usize % 10, 3, 3, 0.0);
        for h in Heuristic::ALL {
            let jt = compile(&net, h, 0).unwrap();
            assert!(jt.cliques().len() <= 20);
            assert_eq!(jt.edges().len() + 1, jt.cliques().len());
            assert!(junction_property_by_paths(&jt), "seed {seed} {h}");
        }
    }
}

#[test]
fn compilation_is_deterministic() {
    for seed in 0..10u64 {
        let net = random_network(seed, 10, 3, 3, 0.2);
        for h in Heuristic::ALL {
            assert_eq!(compile(&net, h, 0).unwrap(), compile(&net, h, 0).unwrap());
        }
    }
}

#[test]
fn total_state_space_ignores_clique_order() {
    let net = random_network(3, 10, 4, 3, 0.0);
    let moral = moralize(&net).unwrap();
    let cards = net.cardinalities();
    let tr = triangulate_from(&moral, &cards, Heuristic::MinSize, 0);
    let cliques = extract_cliques(&tr, &moral);
    let mut reversed = cliques.clone();
    reversed.reverse();
    let a = JunctionTree::build(&net, cliques, None).unwrap().stats();
    let b = JunctionTree::build(&net, reversed, None).unwrap().stats();
    assert_eq!(a.total_state_space, b.total_state_space);
    assert_eq!(a.max_clique_state_space, b.max_clique_state_space);
}

#[test]
fn stats_after_finding() {
    let net = jtree_core::NetworkSpec::new(
        "chain",
        vec![
            jtree_core::NodeSpec::new("A", ["t", "f"], [] as [&str; 0], vec![0.3, 0.7]),
            jtree_core::NodeSpec::new("B", ["t", "f"], ["A"], vec![0.9, 0.1, 0.2, 0.8]),
        ],
    );
    let mut jt = compile(&net, Heuristic::MinSize, 0).unwrap();
    jt.enter_case(&jtree_core::Case::from_findings([jtree_core::Finding::single(0, 0)])).unwrap();
    jt.propagate().unwrap();
    assert_eq!(jt.stats().zero_fraction, 0.5);
}

#[test]
fn max_card_start_node_changes_the_order_only() {
    let net = random_network(11, 10, 3, 3, 0.0);
    let moral = moralize(&net).unwrap();
    let cards = net.cardinalities();
    let a = triangulate_from(&moral, &cards, Heuristic::MaxCardinality, 0);
    let b = triangulate_from(&moral, &cards, Heuristic::MaxCardinality, 5);
    assert_eq!(*b.elimination_order.last().unwrap(), 5);
    assert_eq!(*a.elimination_order.last().unwrap(), 0);
}
