//! Causal probabilistic network description and validation.
//!
//! CPT layout: for a node with parents `p1..pk` (declared order) the flat table
//! is row-major over parent configurations, the last parent varying fastest;
//! each row lists the node's own states in declared order.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Tolerance on conditional-distribution row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub id: String,
    pub states: Vec<String>,
    pub parents: Vec<String>,
    pub cpt: Vec<f64>,
}

impl NodeSpec {
    pub fn new(
        id: impl Into<String>,
        states: impl IntoIterator<Item = impl Into<String>>,
        parents: impl IntoIterator<Item = impl Into<String>>,
        cpt: Vec<f64>,
    ) -> Self {
        NodeSpec {
            id: id.into(),
            states: states.into_iter().map(Into::into).collect(),
            parents: parents.into_iter().map(Into::into).collect(),
            cpt,
        }
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkSpec {
    pub name: String,
    pub nodes: Vec<NodeSpec>,
}

/// One problem found by [`NetworkSpec::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateId { id: String },
    UnknownParent { node: String, parent: String },
    DuplicateParent { node: String, parent: String },
    TooFewStates { node: String, count: usize },
    DuplicateState { node: String, state: String },
    CptLength { node: String, expected: usize, actual: usize },
    EntryOutOfRange { node: String, index: usize, value: f64 },
    RowSum { node: String, row: usize, sum: f64 },
    Cycle { nodes: Vec<String> },
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Violation::DuplicateId { id } => write!(f, "duplicate node id `{id}`"),
            Violation::UnknownParent { node, parent } => {
                write!(f, "node `{node}` names unknown parent `{parent}`")
            }
            Violation::DuplicateParent { node, parent } => {
                write!(f, "node `{node}` lists parent `{parent}` more than once")
            }
            Violation::TooFewStates { node, count } => {
                write!(f, "node `{node}` has {count} state(s), at least 2 required")
            }
            Violation::DuplicateState { node, state } => {
                write!(f, "node `{node}` repeats state label `{state}`")
            }
            Violation::CptLength { node, expected, actual } => {
                write!(f, "node `{node}` cpt has {actual} entries, expected {expected}")
            }
            Violation::EntryOutOfRange { node, index, value } => {
                write!(f, "node `{node}` cpt entry {index} = {value} outside [0, 1]")
            }
            Violation::RowSum { node, row, sum } => {
                write!(f, "node `{node}` parent configuration {row} sums to {sum}")
            }
            Violation::Cycle { nodes } => {
                write!(f, "directed cycle: ")?;
                for (i, n) in nodes.iter().enumerate() {
                    if i > 0 {
                        write!(f, " -> ")?;
                    }
                    write!(f, "{n}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Total number of CPT entries across all nodes.
    pub parameter_count: usize,
    /// Number of CPT entries that are exactly zero.
    pub zero_count: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn zero_fraction(&self) -> f64 {
        if self.parameter_count == 0 {
            0.0
        } else {
            self.zero_count as f64 / self.parameter_count as f64
        }
    }
}

impl NetworkSpec {
    pub fn new(name: impl Into<String>, nodes: Vec<NodeSpec>) -> Self {
        NetworkSpec { name: name.into(), nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.states.len()).collect()
    }

    /// Checks the structural references a parser must reject outright:
    /// duplicate ids and parents naming undeclared nodes.
    pub fn check_references(&self) -> core::result::Result<(), Violation> {
        let mut seen = BTreeMap::new();
        for node in &self.nodes {
            if seen.insert(node.id.as_str(), ()).is_some() {
                return Err(Violation::DuplicateId { id: node.id.clone() });
            }
        }
        for node in &self.nodes {
            for p in &node.parents {
                if !seen.contains_key(p.as_str()) {
                    return Err(Violation::UnknownParent { node: node.id.clone(), parent: p.clone() });
                }
            }
        }
        Ok(())
    }

    /// Parent lists resolved to node indices. Fails on unknown parents.
    pub fn parent_indices(&self) -> Result<Vec<Vec<usize>>> {
        let index: BTreeMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        self.nodes
            .iter()
            .map(|n| {
                n.parents
                    .iter()
                    .map(|p| index.get(p.as_str()).copied().ok_or_else(|| Error::UnknownNode(p.clone())))
                    .collect()
            })
            .collect()
    }

    /// Reports every violation found; never fails.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if index.insert(node.id.as_str(), i).is_some() {
                report.violations.push(Violation::DuplicateId { id: node.id.clone() });
            }
        }

        let mut parents: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        let mut resolved = true;
        for (i, node) in self.nodes.iter().enumerate() {
            for (k, p) in node.parents.iter().enumerate() {
                if node.parents[..k].contains(p) {
                    report.violations.push(Violation::DuplicateParent { node: node.id.clone(), parent: p.clone() });
                }
                match index.get(p.as_str()) {
                    Some(&j) => parents[i].push(j),
                    None => {
                        resolved = false;
                        report.violations.push(Violation::UnknownParent { node: node.id.clone(), parent: p.clone() });
                    }
                }
            }
        }

        for node in &self.nodes {
            if node.states.len() < 2 {
                report.violations.push(Violation::TooFewStates { node: node.id.clone(), count: node.states.len() });
            }
            for (k, s) in node.states.iter().enumerate() {
                if node.states[..k].contains(s) {
                    report.violations.push(Violation::DuplicateState { node: node.id.clone(), state: s.clone() });
                }
            }
        }

        for (i, node) in self.nodes.iter().enumerate() {
            report.parameter_count += node.cpt.len();
            report.zero_count += node.cpt.iter().filter(|&&x| x == 0.0).count();
            for (k, &x) in node.cpt.iter().enumerate() {
                if !(0.0..=1.0).contains(&x) {
                    report.violations.push(Violation::EntryOutOfRange { node: node.id.clone(), index: k, value: x });
                }
            }
            if !resolved {
                continue;
            }
            let card = node.states.len();
            let rows: usize = parents[i].iter().map(|&p| self.nodes[p].states.len()).product();
            let expected = card * rows;
            if node.cpt.len() != expected {
                report.violations.push(Violation::CptLength {
                    node: node.id.clone(),
                    expected,
                    actual: node.cpt.len(),
                });
                continue;
            }
            if card == 0 {
                continue;
            }
            for (row, chunk) in node.cpt.chunks(card).enumerate() {
                let sum: f64 = chunk.iter().sum();
                if !((sum - 1.0) <= ROW_SUM_TOLERANCE && (1.0 - sum) <= ROW_SUM_TOLERANCE) {
                    report.violations.push(Violation::RowSum { node: node.id.clone(), row, sum });
                }
            }
        }

        if resolved {
            if let Some(cycle) = find_cycle(&parents) {
                report
                    .violations
                    .push(Violation::Cycle { nodes: cycle.into_iter().map(|i| self.nodes[i].id.clone()).collect() });
            }
        }
        report
    }

    /// Validates and fails with every violation when the network is unusable.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidNetwork(report.violations))
        }
    }
}

/// Returns one directed cycle (in arc order, first node repeated at the end)
/// of the parent-to-child graph, if any exists.
fn find_cycle(parents: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = parents.len();
    let mut children = vec![Vec::new(); n];
    for (child, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(child);
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut color = vec![0u8; n];
    let mut stack_path: Vec<usize> = Vec::new();
    for start in 0..n {
        if color[start] != 0 {
            continue;
        }
        let mut frames: Vec<(usize, usize)> = vec![(start, 0)];
        color[start] = 1;
        stack_path.push(start);
        while let Some(&mut (v, ref mut next)) = frames.last_mut() {
            if *next < children[v].len() {
                let w = children[v][*next];
                *next += 1;
                match color[w] {
                    0 => {
                        color[w] = 1;
                        stack_path.push(w);
                        frames.push((w, 0));
                    }
                    1 => {
                        let pos = stack_path.iter().position(|&x| x == w).unwrap();
                        let mut cycle: Vec<usize> = stack_path[pos..].to_vec();
                        cycle.push(w);
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                color[v] = 2;
                stack_path.pop();
                frames.pop();
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn chain() -> NetworkSpec {
        NetworkSpec::new(
            "chain",
            vec![
                NodeSpec::new("A", ["t", "f"], [] as [&str; 0], vec![0.3, 0.7]),
                NodeSpec::new("B", ["t", "f"], ["A"], vec![0.9, 0.1, 0.2, 0.8]),
            ],
        )
    }

    #[test]
    fn chain_is_valid() {
        let r = chain().validate();
        assert!(r.is_valid(), "{:?}", r.violations);
        assert_eq!(r.parameter_count, 6);
        assert_eq!(r.zero_count, 0);
    }

    #[test]
    fn bad_row_sum_is_reported() {
        let mut net = chain();
        net.nodes[1].cpt = vec![0.9, 0.2, 0.2, 0.8];
        let r = net.validate();
        assert_eq!(r.violations, vec![Violation::RowSum { node: "B".into(), row: 0, sum: 0.9 + 0.2 }]);
    }

    #[test]
    fn cycle_is_listed() {
        let mut net = chain();
        net.nodes[0].parents = vec!["B".into()];
        net.nodes[0].cpt = vec![0.3, 0.7, 0.3, 0.7];
        let r = net.validate();
        let cycles: Vec<_> = r
            .violations
            .iter()
            .filter_map(|v| match v {
                Violation::Cycle { nodes } => Some(nodes.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(cycles.len(), 1);
        let c = &cycles[0];
        assert_eq!(c.first(), c.last());
        assert!(c.contains(&"A".into()) && c.contains(&"B".into()));
    }

    #[test]
    fn references() {
        let mut net = chain();
        net.nodes[1].parents = vec!["Z".into()];
        assert_eq!(net.check_references(), Err(Violation::UnknownParent { node: "B".into(), parent: "Z".into() }));
        let mut net = chain();
        net.nodes[1].id = "A".into();
        assert_eq!(net.check_references(), Err(Violation::DuplicateId { id: "A".into() }));
    }

    #[test]
    fn range_and_length() {
        let mut net = chain();
        net.nodes[0].cpt = vec![-0.1, 1.1];
        net.nodes[1].cpt = vec![0.9, 0.1];
        let r = net.validate();
        assert!(r.violations.iter().any(|v| matches!(v, Violation::EntryOutOfRange { index: 0, .. })));
        assert!(r.violations.iter().any(|v| matches!(v, Violation::EntryOutOfRange { index: 1, .. })));
        assert!(r.violations.iter().any(|v| matches!(v, Violation::CptLength { expected: 4, actual: 2, .. })));
    }
}
