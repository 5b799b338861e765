//! Moral graphs, triangulation heuristics and clique extraction.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::model::NetworkSpec;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UndirectedGraph {
    adj: Vec<BTreeSet<usize>>,
}

impl UndirectedGraph {
    pub fn new(vertices: usize) -> Self {
        UndirectedGraph { adj: vec![BTreeSet::new(); vertices] }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    /// Adds `a - b`. Self-loops are ignored. Returns whether the edge is new.
    pub fn add_edge(&mut self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        self.adj[b].insert(a);
        self.adj[a].insert(b)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    /// Edges as `(lo, hi)` pairs in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, ns) in self.adj.iter().enumerate() {
            out.extend(ns.range(a + 1..).map(|&b| (a, b)));
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn with_edges(&self, extra: &[(usize, usize)]) -> UndirectedGraph {
        let mut g = self.clone();
        for &(a, b) in extra {
            g.add_edge(a, b);
        }
        g
    }

    /// Connected components, each sorted, ordered by their lowest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &w in &self.adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Links every arc (direction dropped) and every pair of co-parents.
pub fn moralize(net: &NetworkSpec) -> Result<UndirectedGraph> {
    let parents = net.parent_indices()?;
    let mut g = UndirectedGraph::new(net.len());
    for (child, ps) in parents.iter().enumerate() {
        for (k, &p) in ps.iter().enumerate() {
            g.add_edge(p, child);
            for &q in &ps[k + 1..] {
                g.add_edge(p, q);
            }
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Heuristic {
    /// Maximum cardinality search, eliminating in reverse visit order.
    MaxCardinality,
    /// Greedy elimination of the vertex with the fewest-node elimination clique.
    MinSize,
    /// Greedy elimination of the vertex with the smallest elimination-clique state space.
    MinWeight,
}

impl Heuristic {
    pub const ALL: [Heuristic; 3] = [Heuristic::MaxCardinality, Heuristic::MinSize, Heuristic::MinWeight];

    pub fn name(self) -> &'static str {
        match self {
            Heuristic::MaxCardinality => "max-card",
            Heuristic::MinSize => "min-size",
            Heuristic::MinWeight => "min-weight",
        }
    }

    pub fn from_name(s: &str) -> Option<Heuristic> {
        Heuristic::ALL.into_iter().find(|h| h.name() == s)
    }
}

impl core::fmt::Display for Heuristic {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangulationResult {
    /// Added edges as sorted `(lo, hi)` pairs.
    pub fill_in: Vec<(usize, usize)>,
    /// A perfect elimination order of the filled graph.
    pub elimination_order: Vec<usize>,
    pub heuristic: Heuristic,
}

impl TriangulationResult {
    pub fn filled(&self, g: &UndirectedGraph) -> UndirectedGraph {
        g.with_edges(&self.fill_in)
    }
}

/// Triangulates with the max-cardinality search starting at vertex 0.
pub fn triangulate(g: &UndirectedGraph, cards: &[usize], heuristic: Heuristic) -> TriangulationResult {
    triangulate_from(g, cards, heuristic, 0)
}

/// As [`triangulate`], with an explicit max-cardinality start vertex.
/// `start` is ignored by the greedy heuristics.
pub fn triangulate_from(
    g: &UndirectedGraph,
    cards: &[usize],
    heuristic: Heuristic,
    start: usize,
) -> TriangulationResult {
    let order = match heuristic {
        Heuristic::MaxCardinality => {
            let mut visit = max_cardinality_search(g, start);
            visit.reverse();
            visit
        }
        Heuristic::MinSize => greedy_order(g, |clique| clique.len() as u128),
        Heuristic::MinWeight => {
            greedy_order(g, |clique| clique.iter().fold(1u128, |acc, &v| acc.saturating_mul(cards[v] as u128)))
        }
    };
    let fill_in = elimination_fill(g, &order);
    TriangulationResult { fill_in, elimination_order: order, heuristic }
}

/// Visit order of a maximum cardinality search: each step takes the unvisited
/// vertex with the most visited neighbors, lowest index on ties.
pub fn max_cardinality_search(g: &UndirectedGraph, start: usize) -> Vec<usize> {
    let n = g.vertex_count();
    let mut weight = vec![0usize; n];
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for step in 0..n {
        let v = if step == 0 && start < n {
            start
        } else {
            let mut best = None;
            for u in 0..n {
                if !visited[u] && best.is_none_or(|b: usize| weight[u] > weight[b]) {
                    best = Some(u);
                }
            }
            best.unwrap()
        };
        visited[v] = true;
        order.push(v);
        for &w in g.neighbors(v) {
            if !visited[w] {
                weight[w] += 1;
            }
        }
    }
    order
}

/// Greedy elimination: repeatedly removes the vertex minimizing `cost` of its
/// elimination clique (itself plus remaining neighbors), lowest index on ties.
fn greedy_order(g: &UndirectedGraph, cost: impl Fn(&[usize]) -> u128) -> Vec<usize> {
    let n = g.vertex_count();
    let mut work = g.clone();
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n);
    let mut clique = Vec::new();
    for _ in 0..n {
        let mut best: Option<(u128, usize)> = None;
        for v in (0..n).filter(|&v| alive[v]) {
            clique.clear();
            clique.push(v);
            clique.extend(work.neighbors(v).iter().copied());
            let c = cost(&clique);
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, v));
            }
        }
        let (_, v) = best.unwrap();
        let ns: Vec<usize> = work.neighbors(v).iter().copied().collect();
        for (i, &a) in ns.iter().enumerate() {
            for &b in &ns[i + 1..] {
                work.add_edge(a, b);
            }
        }
        for &a in &ns {
            work.adj[a].remove(&v);
        }
        work.adj[v].clear();
        alive[v] = false;
        order.push(v);
    }
    order
}

/// Fill-in produced by eliminating vertices in `order`.
pub fn elimination_fill(g: &UndirectedGraph, order: &[usize]) -> Vec<(usize, usize)> {
    let n = g.vertex_count();
    let mut pos = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut work = g.clone();
    let mut fill = BTreeSet::new();
    for &v in order {
        let later: Vec<usize> = work.neighbors(v).iter().copied().filter(|&w| pos[w] > pos[v]).collect();
        for (i, &a) in later.iter().enumerate() {
            for &b in &later[i + 1..] {
                if work.add_edge(a, b) {
                    fill.insert((a.min(b), a.max(b)));
                }
            }
        }
    }
    fill.into_iter().collect()
}

/// Chordality test: a max-cardinality search order must eliminate without fill.
pub fn is_chordal(g: &UndirectedGraph) -> bool {
    let mut order = max_cardinality_search(g, 0);
    order.reverse();
    elimination_fill(g, &order).is_empty()
}

/// Maximal cliques of the triangulated graph, each sorted by node index and
/// listed by the elimination position of their earliest-eliminated member.
pub fn extract_cliques(tr: &TriangulationResult, g: &UndirectedGraph) -> Vec<Vec<usize>> {
    let filled = tr.filled(g);
    let n = filled.vertex_count();
    let mut pos = vec![0usize; n];
    for (i, &v) in tr.elimination_order.iter().enumerate() {
        pos[v] = i;
    }
    let candidates: Vec<Vec<usize>> = tr
        .elimination_order
        .iter()
        .map(|&v| {
            let mut c: Vec<usize> = filled.neighbors(v).iter().copied().filter(|&w| pos[w] > pos[v]).collect();
            c.push(v);
            c.sort_unstable();
            c
        })
        .collect();
    let is_subset = |a: &[usize], b: &[usize]| a.len() < b.len() && a.iter().all(|x| b.binary_search(x).is_ok());
    candidates.iter().filter(|c| !candidates.iter().any(|d| is_subset(c, d))).cloned().collect()
}
