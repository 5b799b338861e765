#![allow(dead_code)]

use jtree_core::{Case, Finding, NetworkSpec, NodeSpec};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random DAG over `nodes` nodes with 2..=max_states states, at most
/// `max_parents` parents drawn from earlier nodes, and random CPT rows in
/// which roughly `zero_prob` of the entries are exact zeros.
pub fn random_network(seed: u64, nodes: usize, max_states: usize, max_parents: usize, zero_prob: f64) -> NetworkSpec {
    skewed_network(seed, nodes, max_states, max_parents, zero_prob, 1.0)
}

/// As [`random_network`], with each raw entry raised to `power` so larger
/// powers give more small entries.
pub fn skewed_network(
    seed: u64,
    nodes: usize,
    max_states: usize,
    max_parents: usize,
    zero_prob: f64,
    power: f64,
) -> NetworkSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cards: Vec<usize> = (0..nodes).map(|_| rng.random_range(2..=max_states)).collect();
    let mut specs = Vec::new();
    for i in 0..nodes {
        let k = rng.random_range(0..=max_parents.min(i));
        let mut parents: Vec<usize> = sample(&mut rng, i.max(1), k).into_vec();
        if i == 0 {
            parents.clear();
        }
        parents.sort_unstable();
        let rows: usize = parents.iter().map(|&p| cards[p]).product();
        let mut cpt = Vec::with_capacity(rows * cards[i]);
        for _ in 0..rows {
            let mut row: Vec<f64> = (0..cards[i])
                .map(|_| if rng.random_bool(zero_prob) { 0.0 } else { rng.random_range(0.01f64..1.0).powf(power) })
                .collect();
            if row.iter().all(|&x| x == 0.0) {
                let j = rng.random_range(0..cards[i]);
                row[j] = 1.0;
            }
            let s: f64 = row.iter().sum();
            cpt.extend(row.into_iter().map(|x| x / s));
        }
        specs.push(NodeSpec::new(
            format!("N{i}"),
            (0..cards[i]).map(|s| format!("s{s}")),
            parents.iter().map(|&p| format!("N{p}")),
            cpt,
        ));
    }
    NetworkSpec::new(format!("random-{seed}"), specs)
}

/// A case of single-state findings on up to `max_findings` distinct nodes.
pub fn random_case(rng: &mut impl Rng, net: &NetworkSpec, max_findings: usize) -> Case {
    let n = net.len();
    let k = rng.random_range(0..=max_findings.min(n));
    let nodes = sample(rng, n, k).into_vec();
    Case::from_findings(nodes.into_iter().map(|v| Finding::single(v, rng.random_range(0..net.nodes[v].states.len()))))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
