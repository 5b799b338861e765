//! Evidence entry and exact propagation.
//!
//! Each edge stores its separator table. When `u` absorbs from `v` through
//! separator `s`, `u` is multiplied by `marg_v(s) / stored(s)` and the stored
//! table becomes `marg_v(s)`. On a consistent tree the stored table equals
//! `marg_u(s)`, so this is the ratio of the two separator marginals; keeping
//! the stored copy also makes the update correct for freshly initialized tables
//! and for evidence entered on both sides of an edge.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::junction::{JunctionTree, Status};
use crate::table::Finding;

/// A set of findings, at most one per node.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Case {
    findings: BTreeMap<usize, Vec<usize>>,
}

impl Case {
    pub fn new() -> Self {
        Case::default()
    }

    pub fn from_findings(findings: impl IntoIterator<Item = Finding>) -> Self {
        let mut case = Case::new();
        for f in findings {
            case.add(f);
        }
        case
    }

    /// Adds a finding; a second finding on the same node is intersected with the first.
    pub fn add(&mut self, f: Finding) {
        match self.findings.get_mut(&f.node) {
            Some(prev) => prev.retain(|s| f.states.binary_search(s).is_ok()),
            None => {
                self.findings.insert(f.node, f.states);
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.findings.len()
    }

    /// `(node, allowed states)` in node order. The state list may be empty
    /// after contradictory findings were intersected.
    pub fn findings(&self) -> impl Iterator<Item = (usize, &[usize])> + '_ {
        self.findings.iter().map(|(&n, s)| (n, s.as_slice()))
    }

    pub fn allowed(&self, node: usize) -> Option<&[usize]> {
        self.findings.get(&node).map(Vec::as_slice)
    }

    /// Whether a full joint assignment agrees with every finding.
    pub fn admits(&self, assignment: &[usize]) -> bool {
        self.findings.iter().all(|(&n, s)| s.binary_search(&assignment[n]).is_ok())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOutcome {
    /// Root table sum after collection: the probability of the entered evidence.
    pub normalization: f64,
    pub excluded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Divide every table by the normalization constant.
    Normalized,
    /// Leave tables summing to the normalization constant.
    Unnormalized,
}

impl JunctionTree {
    /// Enters each finding into its node's home clique and marks the tree
    /// inconsistent. An empty case leaves the tree untouched.
    pub fn enter_case(&mut self, case: &Case) -> Result<()> {
        let n = self.variables.len();
        for (node, _) in case.findings() {
            if node >= n {
                return Err(Error::NodeIndex(node));
            }
        }
        for (node, states) in case.findings() {
            let f = Finding { node, states: states.to_vec() };
            let c = self.home[node];
            self.cliques[c].table = self.cliques[c].table.enter_finding(&f)?;
            self.status = Status::Inconsistent;
            self.evidence = true;
        }
        Ok(())
    }

    /// Clique `into` absorbs from adjacent clique `from`.
    pub fn absorb(&mut self, into: usize, from: usize) -> Result<()> {
        let edge = self.neighbors[into]
            .iter()
            .find(|&&(nb, _)| nb == from)
            .map(|&(_, e)| e)
            .ok_or_else(|| Error::MalformedTree(alloc::format!("cliques {into} and {from} are not adjacent")))?;
        let fresh = self.cliques[from].table.marginalize(&self.edges[edge].separator)?;
        let ratio = fresh.divide(&self.edges[edge].table)?;
        self.cliques[into].table = self.cliques[into].table.multiply(&ratio)?;
        self.edges[edge].table = fresh;
        Ok(())
    }

    /// Parent of every clique and a preorder when the tree is rooted at `root`.
    fn rooted(&self, root: usize) -> (Vec<usize>, Vec<usize>) {
        let k = self.cliques.len();
        let mut parent = vec![usize::MAX; k];
        let mut order = Vec::with_capacity(k);
        let mut stack = vec![root];
        parent[root] = root;
        while let Some(c) = stack.pop() {
            order.push(c);
            for &(nb, _) in self.neighbors[c].iter().rev() {
                if parent[nb] == usize::MAX {
                    parent[nb] = c;
                    stack.push(nb);
                }
            }
        }
        (parent, order)
    }

    /// Moves all evidence towards `root`; returns the root table sum.
    pub fn collect_evidence(&mut self, root: usize) -> Result<f64> {
        self.check_root(root)?;
        let (parent, order) = self.rooted(root);
        for &c in order.iter().rev() {
            if c != root {
                self.absorb(parent[c], c)?;
            }
        }
        Ok(self.cliques[root].table.sum())
    }

    /// Spreads the state of `root` to every other clique.
    pub fn distribute_evidence(&mut self, root: usize) -> Result<()> {
        self.check_root(root)?;
        let (parent, order) = self.rooted(root);
        for &c in &order {
            if c != root {
                self.absorb(c, parent[c])?;
            }
        }
        Ok(())
    }

    fn check_root(&self, root: usize) -> Result<()> {
        if root < self.cliques.len() {
            Ok(())
        } else {
            Err(Error::MalformedTree(alloc::format!("root clique {root} out of range")))
        }
    }

    /// Global propagation from clique 0 with normalization.
    pub fn propagate(&mut self) -> Result<PropagationOutcome> {
        self.propagate_with(0, Normalization::Normalized)
    }

    /// Collect then distribute from `root`. A zero normalization constant
    /// marks the case excluded and leaves every table zero.
    pub fn propagate_with(&mut self, root: usize, mode: Normalization) -> Result<PropagationOutcome> {
        let mu = self.collect_evidence(root)?;
        if mu == 0.0 {
            for c in &mut self.cliques {
                c.table = c.table.zeroed();
            }
            for e in &mut self.edges {
                e.table = e.table.zeroed();
            }
            self.mass = 0.0;
            self.status = Status::Consistent;
            return Ok(PropagationOutcome { normalization: 0.0, excluded: true });
        }
        self.distribute_evidence(root)?;
        match mode {
            Normalization::Normalized => {
                self.normalize_by(mu);
                self.mass = 1.0;
            }
            Normalization::Unnormalized => self.mass = mu,
        }
        self.status = Status::Consistent;
        Ok(PropagationOutcome { normalization: mu, excluded: false })
    }

    /// Divides every clique and separator table by `by`.
    pub fn normalize_by(&mut self, by: f64) {
        for c in &mut self.cliques {
            c.table = c.table.scaled_down(by);
        }
        for e in &mut self.edges {
            e.table = e.table.scaled_down(by);
        }
        self.mass /= by;
    }

    /// Marginal table of `node` in its home clique, not normalized.
    pub fn raw_marginal(&self, node: usize) -> Result<Vec<f64>> {
        if self.status != Status::Consistent {
            return Err(Error::NotConsistent);
        }
        let c = *self.home.get(node).ok_or(Error::NodeIndex(node))?;
        Ok(self.cliques[c].table.marginalize(&[node])?.to_dense_values())
    }

    /// Posterior distribution of `node`.
    pub fn marginal(&self, node: usize) -> Result<Vec<f64>> {
        let raw = self.raw_marginal(node)?;
        let total: f64 = raw.iter().sum();
        if total == 0.0 {
            return Err(Error::Excluded);
        }
        Ok(raw.into_iter().map(|x| x / total).collect())
    }

    /// Looks up a node by id and one of its states by label.
    pub fn resolve_state(&self, node: &str, state: &str) -> Result<(usize, usize)> {
        let n = self.node_index(node).ok_or_else(|| Error::UnknownNode(node.into()))?;
        let s = self.variables[n]
            .states
            .iter()
            .position(|x| x == state)
            .ok_or_else(|| Error::UnknownState { node: node.into(), state: state.into() })?;
        Ok((n, s))
    }
}
