//! Brute-force reference by full joint enumeration, for small networks.

use alloc::vec;
use alloc::vec::Vec;

use crate::engine::Case;
use crate::error::{Error, Result};
use crate::junction::JunctionTree;
use crate::model::NetworkSpec;

/// Largest joint state space [`enumerate_joint`] accepts.
pub const ENUMERATION_GUARD: u128 = 1 << 24;

/// The full joint distribution, linearized over all nodes in index order with
/// the last node varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    cards: Vec<usize>,
    values: Vec<f64>,
}

/// Odometer over every joint assignment in linear order.
fn for_each_assignment(cards: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let len: usize = cards.iter().product();
    let mut x = vec![0usize; cards.len()];
    for lin in 0..len {
        f(lin, &x);
        for ax in (0..cards.len()).rev() {
            x[ax] += 1;
            if x[ax] < cards[ax] {
                break;
            }
            x[ax] = 0;
        }
    }
}

pub fn enumerate_joint(net: &NetworkSpec) -> Result<JointTable> {
    net.ensure_valid()?;
    let cards = net.cardinalities();
    let size = cards.iter().fold(1u128, |a, &c| a.saturating_mul(c as u128));
    if size > ENUMERATION_GUARD {
        return Err(Error::StateSpaceTooLarge(size));
    }
    let parents = net.parent_indices()?;
    let mut values = vec![0.0; size as usize];
    for_each_assignment(&cards, |lin, x| {
        let mut p = 1.0;
        for (v, ps) in parents.iter().enumerate() {
            let row = ps.iter().fold(0usize, |r, &q| r * cards[q] + x[q]);
            p *= net.nodes[v].cpt[row * cards[v] + x[v]];
        }
        values[lin] = p;
    });
    Ok(JointTable { cards, values })
}

impl JointTable {
    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Calls `f(assignment, probability)` for every joint configuration.
    pub fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        for_each_assignment(&self.cards, |lin, x| f(x, self.values[lin]));
    }

    /// Probability of the evidence: the sum of entries the case admits.
    pub fn evidence_probability(&self, case: &Case) -> f64 {
        let mut sum = 0.0;
        self.for_each(|x, p| {
            if case.admits(x) {
                sum += p;
            }
        });
        sum
    }

    /// Unnormalized `P(node = s, case)` for every state `s`.
    pub fn masked_marginal(&self, case: &Case, node: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.cards[node]];
        self.for_each(|x, p| {
            if case.admits(x) {
                out[x[node]] += p;
            }
        });
        out
    }

    /// `P(node | case)`; fails when the case has zero probability.
    pub fn posterior(&self, case: &Case, node: usize) -> Result<Vec<f64>> {
        if node >= self.cards.len() {
            return Err(Error::NodeIndex(node));
        }
        let m = self.masked_marginal(case, node);
        let total: f64 = m.iter().sum();
        if total == 0.0 {
            return Err(Error::ZeroEvidence);
        }
        Ok(m.into_iter().map(|x| x / total).collect())
    }

    /// `P(v | case)` for every node `v`, in one pass over the joint.
    pub fn posteriors(&self, case: &Case) -> Result<Vec<Vec<f64>>> {
        let mut out: Vec<Vec<f64>> = self.cards.iter().map(|&k| vec![0.0; k]).collect();
        let mut total = 0.0;
        self.for_each(|x, p| {
            if p != 0.0 && case.admits(x) {
                total += p;
                for (v, &s) in x.iter().enumerate() {
                    out[v][s] += p;
                }
            }
        });
        if total == 0.0 {
            return Err(Error::ZeroEvidence);
        }
        for m in &mut out {
            let sum: f64 = m.iter().sum();
            m.iter_mut().for_each(|x| *x /= sum);
        }
        Ok(out)
    }

    /// Copy with every configuration rejected by `keep` set to zero.
    pub fn restricted(&self, mut keep: impl FnMut(&[usize]) -> bool) -> JointTable {
        let mut values = self.values.clone();
        for_each_assignment(&self.cards, |lin, x| {
            if !keep(x) {
                values[lin] = 0.0;
            }
        });
        JointTable { cards: self.cards.clone(), values }
    }

    /// Copy keeping only configurations whose projection onto every clique of
    /// `tree` has a nonzero entry of at least `cutoffs[c]`.
    pub fn survivors(&self, tree: &JunctionTree, cutoffs: &[f64]) -> JointTable {
        let cliques = tree.cliques();
        self.restricted(|x| {
            cliques.iter().zip(cutoffs).all(|(c, &cut)| {
                let t = &c.table;
                let lin = t.scope().iter().zip(t.shape()).fold(0usize, |r, (&v, &k)| r * k + x[v]);
                let value = t.get(lin);
                value > 0.0 && value >= cut
            })
        })
    }
}
