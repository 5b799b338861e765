//! Junction trees of belief universes.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{self, Heuristic};
use crate::model::NetworkSpec;
use crate::table::BeliefTable;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub id: String,
    pub states: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clique {
    /// Member nodes, ascending.
    pub nodes: Vec<usize>,
    pub table: BeliefTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    /// `nodes(a) ∩ nodes(b)`, ascending.
    pub separator: Vec<usize>,
    pub table: BeliefTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Inconsistent,
    Consistent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JunctionTree {
    pub(crate) name: String,
    pub(crate) variables: Vec<Variable>,
    pub(crate) heuristic: Option<Heuristic>,
    pub(crate) cliques: Vec<Clique>,
    pub(crate) edges: Vec<Edge>,
    pub(crate) status: Status,
    /// Sum of any clique table when consistent.
    pub(crate) mass: f64,
    pub(crate) evidence: bool,
    pub(crate) neighbors: Vec<Vec<(usize, usize)>>,
    pub(crate) home: Vec<usize>,
}

/// Everything needed to rebuild a tree without recompiling.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeParts {
    pub name: String,
    pub variables: Vec<Variable>,
    pub heuristic: Option<Heuristic>,
    pub cliques: Vec<Clique>,
    pub edges: Vec<Edge>,
    pub status: Status,
    pub mass: f64,
    pub evidence: bool,
}

fn state_space(nodes: &[usize], cards: &[usize]) -> u128 {
    nodes.iter().fold(1u128, |acc, &v| acc.saturating_mul(cards[v] as u128))
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect()
}

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
}

/// Junction-tree edges over `cliques` (each sorted): a maximal spanning tree of
/// the clique graph weighted by separator size. Ties prefer the smaller
/// separator state space, then the lowest clique indices. Cliques from
/// different components are joined by empty separators.
pub fn spanning_edges(cliques: &[Vec<usize>], cards: &[usize]) -> Vec<(usize, usize, Vec<usize>)> {
    let mut candidates = Vec::new();
    for i in 0..cliques.len() {
        for j in i + 1..cliques.len() {
            let sep = intersect(&cliques[i], &cliques[j]);
            candidates.push((core::cmp::Reverse(sep.len()), state_space(&sep, cards), i, j, sep));
        }
    }
    candidates.sort();
    let mut sets = DisjointSets((0..cliques.len()).collect());
    let mut out = Vec::new();
    for (_, _, i, j, sep) in candidates {
        let (ri, rj) = (sets.find(i), sets.find(j));
        if ri != rj {
            sets.0[ri] = rj;
            out.push((i, j, sep));
            if out.len() + 1 == cliques.len() {
                break;
            }
        }
    }
    out
}

/// Checks that for every node the cliques holding it form a connected subtree.
pub fn check_junction_property(node_count: usize, cliques: &[Vec<usize>], edges: &[(usize, usize)]) -> Result<()> {
    let mut adj = vec![Vec::new(); cliques.len()];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for v in 0..node_count {
        let holders: Vec<usize> = (0..cliques.len()).filter(|&c| cliques[c].binary_search(&v).is_ok()).collect();
        let Some(&first) = holders.first() else { continue };
        let mut seen = vec![false; cliques.len()];
        seen[first] = true;
        let mut stack = vec![first];
        let mut reached = 1;
        while let Some(c) = stack.pop() {
            for &d in &adj[c] {
                if !seen[d] && cliques[d].binary_search(&v).is_ok() {
                    seen[d] = true;
                    reached += 1;
                    stack.push(d);
                }
            }
        }
        if reached != holders.len() {
            return Err(Error::JunctionProperty(v));
        }
    }
    Ok(())
}

fn variables_of(net: &NetworkSpec) -> Vec<Variable> {
    net.nodes.iter().map(|n| Variable { id: n.id.clone(), states: n.states.clone() }).collect()
}

impl JunctionTree {
    /// Assembles a tree over `cliques` with all-ones tables. The tree is
    /// marked inconsistent until [`JunctionTree::initialize`] runs.
    pub fn build(net: &NetworkSpec, cliques: Vec<Vec<usize>>, heuristic: Option<Heuristic>) -> Result<JunctionTree> {
        let cards = net.cardinalities();
        let mut cliques = cliques;
        for c in &mut cliques {
            c.sort_unstable();
        }
        let spanning = spanning_edges(&cliques, &cards);
        let pairs: Vec<(usize, usize)> = spanning.iter().map(|e| (e.0, e.1)).collect();
        check_junction_property(net.len(), &cliques, &pairs)?;
        let shape = |nodes: &[usize]| nodes.iter().map(|&v| cards[v]).collect::<Vec<_>>();
        let cliques = cliques
            .into_iter()
            .map(|nodes| {
                let table = BeliefTable::ones(nodes.clone(), shape(&nodes))?;
                Ok(Clique { nodes, table })
            })
            .collect::<Result<Vec<_>>>()?;
        let edges = spanning
            .into_iter()
            .map(|(a, b, separator)| {
                let table = BeliefTable::ones(separator.clone(), shape(&separator))?;
                Ok(Edge { a, b, separator, table })
            })
            .collect::<Result<Vec<_>>>()?;
        JunctionTree::from_parts(TreeParts {
            name: net.name.clone(),
            variables: variables_of(net),
            heuristic,
            cliques,
            edges,
            status: Status::Inconsistent,
            mass: 0.0,
            evidence: false,
        })
    }

    /// Rebuilds a tree from stored parts after checking its structure.
    pub fn from_parts(parts: TreeParts) -> Result<JunctionTree> {
        let TreeParts { name, variables, heuristic, cliques, edges, status, mass, evidence } = parts;
        let n = variables.len();
        let cards: Vec<usize> = variables.iter().map(|v| v.states.len()).collect();
        let bad = |m: String| Err(Error::MalformedTree(m));
        if cliques.is_empty() && n > 0 {
            return bad("no cliques".into());
        }
        let mut covered = vec![false; n];
        for (i, c) in cliques.iter().enumerate() {
            if c.nodes.windows(2).any(|w| w[0] >= w[1]) || c.nodes.iter().any(|&v| v >= n) {
                return bad(format!("clique {i} nodes must be ascending and in range"));
            }
            let shape: Vec<usize> = c.nodes.iter().map(|&v| cards[v]).collect();
            if c.table.scope() != c.nodes.as_slice() || c.table.shape() != shape.as_slice() {
                return bad(format!("clique {i} table does not match its nodes"));
            }
            for &v in &c.nodes {
                covered[v] = true;
            }
        }
        if let Some(v) = covered.iter().position(|&c| !c) {
            return bad(format!("node {v} lies in no clique"));
        }
        if edges.len() + 1 != cliques.len().max(1) {
            return bad(format!("{} edges cannot span {} cliques", edges.len(), cliques.len()));
        }
        let mut sets = DisjointSets((0..cliques.len()).collect());
        let mut neighbors = vec![Vec::new(); cliques.len()];
        for (k, e) in edges.iter().enumerate() {
            if e.a >= cliques.len() || e.b >= cliques.len() || e.a == e.b {
                return bad(format!("edge {k} endpoints invalid"));
            }
            let sep = intersect(&cliques[e.a].nodes, &cliques[e.b].nodes);
            if sep != e.separator || e.table.scope() != sep.as_slice() {
                return bad(format!("edge {k} separator is not the clique intersection"));
            }
            let (ra, rb) = (sets.find(e.a), sets.find(e.b));
            if ra == rb {
                return bad(format!("edge {k} closes a cycle"));
            }
            sets.0[ra] = rb;
            neighbors[e.a].push((e.b, k));
            neighbors[e.b].push((e.a, k));
        }
        let node_sets: Vec<Vec<usize>> = cliques.iter().map(|c| c.nodes.clone()).collect();
        let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e.a, e.b)).collect();
        check_junction_property(n, &node_sets, &pairs)?;
        let home = (0..n)
            .map(|v| {
                (0..cliques.len())
                    .filter(|&c| cliques[c].nodes.binary_search(&v).is_ok())
                    .min_by_key(|&c| (state_space(&cliques[c].nodes, &cards), c))
                    .unwrap()
            })
            .collect();
        Ok(JunctionTree { name, variables, heuristic, cliques, edges, status, mass, evidence, neighbors, home })
    }

    pub fn into_parts(self) -> TreeParts {
        TreeParts {
            name: self.name,
            variables: self.variables,
            heuristic: self.heuristic,
            cliques: self.cliques,
            edges: self.edges,
            status: self.status,
            mass: self.mass,
            evidence: self.evidence,
        }
    }

    /// Multiplies each CPT into one containing clique and propagates, leaving
    /// the tree consistent and normalized.
    pub fn initialize(&mut self, net: &NetworkSpec) -> Result<()> {
        let parents = net.parent_indices()?;
        let cards = net.cardinalities();
        for c in &mut self.cliques {
            c.table = BeliefTable::ones(c.nodes.clone(), c.table.shape().to_vec())?;
        }
        for e in &mut self.edges {
            e.table = BeliefTable::ones(e.separator.clone(), e.table.shape().to_vec())?;
        }
        for (v, ps) in parents.iter().enumerate() {
            let mut family = ps.clone();
            family.push(v);
            let target = self
                .family_clique(&family, &cards)
                .ok_or_else(|| Error::MalformedTree(format!("no clique holds the family of node {v}")))?;
            let cpt = BeliefTable::from_cpt(v, ps, &cards, &net.nodes[v].cpt)?;
            self.cliques[target].table = self.cliques[target].table.multiply(&cpt)?;
        }
        self.status = Status::Inconsistent;
        self.evidence = false;
        self.propagate()?;
        Ok(())
    }

    /// The containing clique with the smallest state space, lowest index on ties.
    pub fn family_clique(&self, family: &[usize], cards: &[usize]) -> Option<usize> {
        (0..self.cliques.len())
            .filter(|&c| family.iter().all(|v| self.cliques[c].nodes.binary_search(v).is_ok()))
            .min_by_key(|&c| (state_space(&self.cliques[c].nodes, cards), c))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn heuristic(&self) -> Option<Heuristic> {
        self.heuristic
    }

    pub fn cliques(&self) -> &[Clique] {
        &self.cliques
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn has_evidence(&self) -> bool {
        self.evidence
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.states.len()).collect()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.id == id)
    }

    /// The clique used for entering findings on and reading marginals of `node`.
    pub fn home_clique(&self, node: usize) -> Option<usize> {
        self.home.get(node).copied()
    }

    /// `(neighbor, edge index)` pairs of clique `c`.
    pub fn neighbors(&self, c: usize) -> &[(usize, usize)] {
        &self.neighbors[c]
    }

    /// Replaces every table by its compressed form.
    pub fn compress(&mut self) {
        for c in &mut self.cliques {
            c.table = c.table.compress();
        }
        for e in &mut self.edges {
            e.table = e.table.compress();
        }
    }

    pub fn decompress(&mut self) {
        for c in &mut self.cliques {
            c.table = c.table.decompress();
        }
        for e in &mut self.edges {
            e.table = e.table.decompress();
        }
    }

    pub fn stats(&self) -> TreeStats {
        let cards = self.cardinalities();
        let mut size_histogram = BTreeMap::new();
        let mut total = 0u128;
        let mut max = 0u128;
        let mut entries = 0u128;
        let mut zeros = 0u128;
        for c in &self.cliques {
            *size_histogram.entry(c.nodes.len()).or_insert(0) += 1;
            let s = state_space(&c.nodes, &cards);
            total = total.saturating_add(s);
            max = max.max(s);
            entries += c.table.len() as u128;
            zeros += (c.table.len() - c.table.nnz()) as u128;
        }
        TreeStats {
            clique_count: self.cliques.len(),
            size_histogram,
            total_state_space: total,
            max_clique_state_space: max,
            zero_fraction: if entries == 0 { 0.0 } else { zeros as f64 / entries as f64 },
        }
    }

    /// Table payload bytes over cliques and separators, as currently stored.
    pub fn payload_bytes(&self) -> usize {
        self.cliques.iter().map(|c| c.table.payload_bytes()).sum::<usize>()
            + self.edges.iter().map(|e| e.table.payload_bytes()).sum::<usize>()
    }

    /// Payload bytes the same tables would take stored densely.
    pub fn dense_bytes(&self) -> usize {
        use crate::table::DENSE_ENTRY_BYTES;
        self.cliques.iter().map(|c| c.table.len() * DENSE_ENTRY_BYTES).sum::<usize>()
            + self.edges.iter().map(|e| e.table.len() * DENSE_ENTRY_BYTES).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeStats {
    pub clique_count: usize,
    /// Clique size -> number of cliques of that size.
    pub size_histogram: BTreeMap<usize, usize>,
    pub total_state_space: u128,
    pub max_clique_state_space: u128,
    /// Fraction of exactly-zero entries over all clique tables.
    pub zero_fraction: f64,
}

/// Moralizes, triangulates, builds and initializes a consistent normalized tree.
pub fn compile(net: &NetworkSpec, heuristic: Heuristic, start: usize) -> Result<JunctionTree> {
    net.ensure_valid()?;
    let moral = graph::moralize(net)?;
    let tr = graph::triangulate_from(&moral, &net.cardinalities(), heuristic, start);
    let cliques = graph::extract_cliques(&tr, &moral);
    let mut jt = JunctionTree::build(net, cliques, Some(heuristic))?;
    jt.initialize(net)?;
    Ok(jt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NodeSpec;

    fn chain() -> NetworkSpec {
        NetworkSpec::new(
            "chain",
            vec![
                NodeSpec::new("A", ["t", "f"], [] as [&str; 0], vec![0.3, 0.7]),
                NodeSpec::new("B", ["t", "f"], ["A"], vec![0.9, 0.1, 0.2, 0.8]),
            ],
        )
    }

    #[test]
    fn spanning_tree_examples() {
        let cards = [2; 4];
        assert_eq!(spanning_edges(&[vec![0, 1], vec![1, 2]], &cards), vec![(0, 1, vec![1])]);
        assert_eq!(spanning_edges(&[vec![0, 1, 2], vec![0, 2, 3]], &cards), vec![(0, 1, vec![0, 2])]);
        let e = spanning_edges(&[vec![0, 1], vec![1, 2], vec![2, 3]], &cards);
        assert_eq!(e, vec![(0, 1, vec![1]), (1, 2, vec![2])]);
    }

    #[test]
    fn junction_property_detects_broken_tree() {
        let cliques = [vec![0, 1], vec![1, 2], vec![0, 3]];
        // node 0 held by cliques 0 and 2, which are not adjacent
        assert_eq!(check_junction_property(4, &cliques, &[(0, 1), (1, 2)]), Err(Error::JunctionProperty(0)));
        assert!(check_junction_property(4, &cliques, &[(0, 1), (0, 2)]).is_ok());
    }

    #[test]
    fn chain_initializes_to_joint() {
        let jt = compile(&chain(), Heuristic::MinSize, 0).unwrap();
        assert_eq!(jt.cliques().len(), 1);
        let v = jt.cliques()[0].table.to_dense_values();
        for (x, y) in v.iter().zip([0.27, 0.03, 0.14, 0.56]) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_eq!(jt.status(), Status::Consistent);
        let s = jt.stats();
        assert_eq!(s.clique_count, 1);
        assert_eq!(s.size_histogram, BTreeMap::from([(2, 1)]));
        assert_eq!(s.total_state_space, 4);
        assert_eq!(s.max_clique_state_space, 4);
        assert_eq!(s.zero_fraction, 0.0);
    }

    #[test]
    fn single_node_copies_prior() {
        let net = NetworkSpec::new("one", vec![NodeSpec::new("A", ["t", "f"], [] as [&str; 0], vec![0.3, 0.7])]);
        let jt = compile(&net, Heuristic::MaxCardinality, 0).unwrap();
        assert_eq!(jt.cliques()[0].table.to_dense_values(), vec![0.3, 0.7]);
    }

    #[test]
    fn disconnected_components_share_one_tree() {
        let net = NetworkSpec::new(
            "two",
            vec![
                NodeSpec::new("A", ["t", "f"], [] as [&str; 0], vec![0.3, 0.7]),
                NodeSpec::new("B", ["t", "f"], [] as [&str; 0], vec![0.6, 0.4]),
            ],
        );
        let jt = compile(&net, Heuristic::MinWeight, 0).unwrap();
        assert_eq!(jt.cliques().len(), 2);
        assert_eq!(jt.edges().len(), 1);
        assert!(jt.edges()[0].separator.is_empty());
        assert_eq!(jt.cliques()[1].table.to_dense_values(), vec![0.6, 0.4]);
    }

    #[test]
    fn from_parts_rejects_cycles_and_bad_separators() {
        let jt = compile(&chain(), Heuristic::MinSize, 0).unwrap();
        let mut parts = jt.clone().into_parts();
        parts.edges.push(Edge { a: 0, b: 0, separator: vec![], table: BeliefTable::scalar(1.0) });
        assert!(JunctionTree::from_parts(parts).is_err());
        assert_eq!(JunctionTree::from_parts(jt.clone().into_parts()).unwrap(), jt);
    }
}
