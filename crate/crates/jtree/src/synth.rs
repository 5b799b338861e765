//! Seeded synthetic networks with skewed, partly deterministic CPTs.

use jtree_core::{NetworkSpec, NodeSpec};
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub nodes: usize,
    pub max_parents: usize,
    pub min_states: usize,
    pub max_states: usize,
    /// Dirichlet concentration of each CPT row; small values give skewed rows.
    pub alpha: f64,
    /// Target fraction of exactly-zero CPT entries.
    pub zero_fraction: f64,
    /// Parents are drawn from the `window` immediately preceding nodes, or
    /// from all predecessors when `None`.
    pub window: Option<usize>,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            nodes: 50,
            max_parents: 3,
            min_states: 4,
            max_states: 8,
            alpha: 0.5,
            zero_fraction: 0.67,
            window: Some(5),
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn check(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Generator(m.into()));
        if self.nodes == 0 {
            return fail("at least one node is required");
        }
        if self.max_parents >= self.nodes {
            return fail("max parents must be below the node count");
        }
        if self.min_states < 2 || self.min_states > self.max_states {
            return fail("state counts need 2 <= min <= max");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail("alpha must be positive and finite");
        }
        if !(0.0..1.0).contains(&self.zero_fraction) {
            return fail("zero fraction must lie in [0, 1)");
        }
        if self.window == Some(0) && self.max_parents > 0 {
            return fail("a parent window of 0 admits no parents");
        }
        Ok(())
    }
}

/// Generates a network whose node order is a topological order.
///
/// Exactly `round(zero_fraction × parameters)` CPT entries are zero, placed
/// uniformly at random subject to every row keeping one nonzero entry; when
/// that cap binds, every row carries the maximum number of zeros instead.
/// Nonzero entries of a row follow a symmetric Dirichlet(α).
pub fn generate_synthetic(p: &SynthParams) -> Result<NetworkSpec> {
    p.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let n = p.nodes;
    let cards: Vec<usize> = (0..n).map(|_| rng.random_range(p.min_states..=p.max_states)).collect();
    let parents: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let lo = p.window.map_or(0, |w| i.saturating_sub(w));
            let k = rng.random_range(0..=p.max_parents.min(i - lo));
            let mut ps: Vec<usize> = sample(&mut rng, i - lo, k).into_iter().map(|j| lo + j).collect();
            ps.sort_unstable();
            ps
        })
        .collect();
    let rows: Vec<usize> = parents.iter().map(|ps| ps.iter().map(|&q| cards[q]).product()).collect();

    let mut zero = (0..n).map(|v| vec![false; rows[v] * cards[v]]).collect::<Vec<_>>();
    let total: usize = zero.iter().map(Vec::len).sum();
    let target = (p.zero_fraction * total as f64).round() as usize;
    let mut slots: Vec<(usize, usize)> = (0..n).flat_map(|v| (0..zero[v].len()).map(move |i| (v, i))).collect();
    slots.shuffle(&mut rng);
    let mut row_zeros: Vec<Vec<usize>> = rows.iter().map(|&r| vec![0; r]).collect();
    let mut placed = 0;
    for (v, i) in slots {
        if placed == target {
            break;
        }
        let row = i / cards[v];
        if row_zeros[v][row] + 1 < cards[v] {
            row_zeros[v][row] += 1;
            zero[v][i] = true;
            placed += 1;
        }
    }

    let gamma = Gamma::new(p.alpha, 1.0).map_err(|e| Error::Generator(e.to_string()))?;
    let nodes = (0..n)
        .map(|v| {
            let mut cpt = Vec::with_capacity(zero[v].len());
            for row in zero[v].chunks(cards[v]) {
                let raw: Vec<f64> =
                    row.iter().map(|&z| if z { 0.0 } else { gamma.sample(&mut rng).max(f64::MIN_POSITIVE) }).collect();
                let sum: f64 = raw.iter().sum();
                cpt.extend(raw.into_iter().map(|x| x / sum));
            }
            NodeSpec::new(
                format!("X{v}"),
                (0..cards[v]).map(|s| format!("s{s}")),
                parents[v].iter().map(|&q| format!("X{q}")),
                cpt,
            )
        })
        .collect();
    Ok(NetworkSpec::new(format!("synthetic-{}", p.seed), nodes))
}
