//! Annihilation of small belief-table entries, global-error accounting and
//! worst-case bounds on posteriors computed from the approximated tree.
//!
//! Write `A` for the event that the joint configuration survives every
//! clique's annihilation. After approximation the tree represents `P(· | A)`,
//! the global error is `e = P(not A) = 1 - μ_A`, and for each single-state
//! finding `f` the report keeps `P(f ∩ not A) = P(f) - P(f ∩ A)`.
//! For a case `F` propagated on the approximated tree with normalization
//! constant `μ = P(F | A)`, any hypothesis `H` satisfies
//!
//! ```text
//! |P(H|F) - P(H|F,A)| <= P(not A | F) = x / (x + μ(1 - e)),  x = P(F ∩ not A)
//! ```
//!
//! with `x <= e` (coarse bound) and `x <= min_i P(f_i ∩ not A)` (refined bound).

use alloc::vec::Vec;

use crate::engine::{Case, Normalization, PropagationOutcome};
use crate::error::{Error, Result};
use crate::junction::{JunctionTree, Status};
use crate::table::BeliefTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Halve a threshold starting from ε until the mass below it fits the budget.
    #[default]
    Halving,
    /// Remove equal-value groups smallest first while the budget allows.
    SortExact,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Halving => "halving",
            Method::SortExact => "sort",
        }
    }

    pub fn from_name(s: &str) -> Option<Method> {
        match s {
            "halving" => Some(Method::Halving),
            "sort" | "sort-exact" => Some(Method::SortExact),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproximationConfig {
    /// Fraction of each table's mass that may be removed.
    pub epsilon: f64,
    pub method: Method,
}

impl ApproximationConfig {
    pub fn new(epsilon: f64, method: Method) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::Epsilon(epsilon));
        }
        Ok(ApproximationConfig { epsilon, method })
    }
}

/// A per-table annihilation threshold: entries strictly below `cutoff` go.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    /// Threshold relative to the table sum.
    pub delta: f64,
    /// Absolute threshold applied to the table entries.
    pub cutoff: f64,
    /// Mass of the entries below `cutoff`.
    pub removed: f64,
}

impl Threshold {
    const NONE: Threshold = Threshold { delta: 0.0, cutoff: 0.0, removed: 0.0 };
}

/// Sum (index order) and maximum of the nonzero entries strictly below `cutoff`.
fn mass_below(t: &BeliefTable, cutoff: f64) -> (f64, f64) {
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for (_, x) in t.nonzeros() {
        if x < cutoff {
            sum += x;
            if x > max {
                max = x;
            }
        }
    }
    (sum, max)
}

/// First δ in `ε, ε/2, ε/4, …` whose sub-δ mass is at most ε, both relative to
/// the table sum. Returns δ = 0 once halving underflows.
pub fn select_threshold_halving(t: &BeliefTable, epsilon: f64) -> Threshold {
    let total = t.sum();
    if epsilon <= 0.0 || total <= 0.0 {
        return Threshold::NONE;
    }
    let budget = epsilon * total;
    let mut delta = epsilon;
    loop {
        let cutoff = delta * total;
        let (removed, max_below) = mass_below(t, cutoff);
        if removed <= budget {
            return Threshold { delta, cutoff, removed };
        }
        // Halvings that keep the cutoff above every removed entry leave the
        // removed set, and so the verdict, unchanged.
        loop {
            delta /= 2.0;
            if delta == 0.0 {
                return Threshold::NONE;
            }
            if delta * total <= max_below {
                break;
            }
        }
    }
}

/// Removes the smallest values first, each group of equal values all or
/// nothing, stopping before the group that would exceed ε of the table sum.
pub fn select_threshold_sort(t: &BeliefTable, epsilon: f64) -> Threshold {
    let total = t.sum();
    if epsilon <= 0.0 || total <= 0.0 {
        return Threshold::NONE;
    }
    let budget = epsilon * total;
    let mut values: Vec<f64> = t.nonzeros().map(|e| e.1).collect();
    values.sort_unstable_by(f64::total_cmp);
    let mut groups: Vec<f64> = values.clone();
    groups.dedup();

    // Number of groups that fit, accumulated in sorted order.
    let mut taken = 0;
    let mut acc = 0.0;
    let mut k = 0;
    for (g, &v) in groups.iter().enumerate() {
        let mut group_sum = 0.0;
        while k < values.len() && values[k] == v {
            group_sum += values[k];
            k += 1;
        }
        if acc + group_sum > budget {
            break;
        }
        acc += group_sum;
        taken = g + 1;
    }
    // The removed mass is reported in index order; back off if that order
    // rounds above the budget.
    while taken > 0 {
        // Entries of the first kept group survive a cutoff equal to its value.
        let cutoff = if taken < groups.len() { groups[taken] } else { groups[taken - 1] * 2.0 };
        let (removed, _) = mass_below(t, cutoff);
        if removed <= budget {
            return Threshold { delta: cutoff / total, cutoff, removed };
        }
        taken -= 1;
    }
    Threshold::NONE
}

pub fn select_threshold(t: &BeliefTable, epsilon: f64, method: Method) -> Threshold {
    match method {
        Method::Halving => select_threshold_halving(t, epsilon),
        Method::SortExact => select_threshold_sort(t, epsilon),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliqueRecord {
    pub delta: f64,
    pub cutoff: f64,
    /// Mass annihilated from this clique's table.
    pub removed: f64,
    /// Table sum before annihilation.
    pub mass_before: f64,
    pub nonzeros_before: usize,
    pub nonzeros_after: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationReport {
    pub config: ApproximationConfig,
    pub cliques: Vec<CliqueRecord>,
    /// `e = 1 - μ_A`.
    pub global_error: f64,
    /// `finding_errors[node][state] = P(node = state ∩ not A)`.
    pub finding_errors: Vec<Vec<f64>>,
}

impl ApproximationReport {
    /// Upper bound on `P(f ∩ not A)` for a finding allowing `states` of `node`.
    pub fn finding_error(&self, node: usize, states: &[usize]) -> f64 {
        states.iter().map(|&s| self.finding_errors[node][s]).sum()
    }

    /// Whether every clique kept at least `1 - ε` of its mass.
    pub fn within_local_budget(&self) -> bool {
        self.cliques.iter().all(|r| r.removed <= self.config.epsilon * r.mass_before)
    }
}

/// Annihilates, re-propagates and compresses a copy of `jt`.
///
/// `jt` must be consistent, normalized and free of evidence.
pub fn approximate(jt: &JunctionTree, config: &ApproximationConfig) -> Result<(JunctionTree, ApproximationReport)> {
    ApproximationConfig::new(config.epsilon, config.method)?;
    if jt.has_evidence() {
        return Err(Error::EvidenceEntered);
    }
    if jt.status() != Status::Consistent {
        return Err(Error::NotConsistent);
    }
    let n = jt.variables().len();
    let prior: Vec<Vec<f64>> = (0..n).map(|v| jt.raw_marginal(v)).collect::<Result<_>>()?;

    let mut out = jt.clone();
    let mut records = Vec::with_capacity(out.cliques.len());
    let mut changed = false;
    for c in &mut out.cliques {
        let th = select_threshold(&c.table, config.epsilon, config.method);
        let before = c.table.nnz();
        let mass_before = c.table.sum();
        let (table, removed) = c.table.annihilate_below(th.cutoff);
        let after = table.nnz();
        changed |= after != before;
        c.table = table;
        records.push(CliqueRecord {
            delta: th.delta,
            cutoff: th.cutoff,
            removed,
            mass_before,
            nonzeros_before: before,
            nonzeros_after: after,
        });
    }

    let mut global_error = 0.0;
    let mut finding_errors: Vec<Vec<f64>> = prior.iter().map(|p| alloc::vec![0.0; p.len()]).collect();
    if changed {
        out.status = Status::Inconsistent;
        let outcome = out.propagate_with(0, Normalization::Unnormalized)?;
        let mu = outcome.normalization;
        global_error = (1.0 - mu).clamp(0.0, 1.0);
        for v in 0..n {
            let kept = out.raw_marginal(v)?;
            for (s, slot) in finding_errors[v].iter_mut().enumerate() {
                *slot = (prior[v][s] - kept[s]).max(0.0);
            }
        }
        if !outcome.excluded {
            out.normalize_by(mu);
            out.mass = 1.0;
        }
    }
    out.compress();
    Ok((out, ApproximationReport { config: *config, cliques: records, global_error, finding_errors }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub mu_case: f64,
    pub coarse: f64,
    pub refined: f64,
    pub excluded: bool,
}

fn ratio_bound(x: f64, kept: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (x / (x + kept)).clamp(0.0, 1.0)
    }
}

/// Bounds on `|P(H|F) - P(H|F,A)|` for the case `F` whose propagation on the
/// approximated tree gave normalization constant `mu_case`.
pub fn worst_case_bound(report: &ApproximationReport, case: &Case, mu_case: f64) -> BoundReport {
    if mu_case <= 0.0 {
        return BoundReport { mu_case: 0.0, coarse: 1.0, refined: 1.0, excluded: true };
    }
    let e = report.global_error;
    let kept = mu_case * (1.0 - e);
    let coarse = ratio_bound(e, kept);
    let m = case.findings().map(|(node, states)| report.finding_error(node, states)).fold(e, f64::min);
    let refined = ratio_bound(m, kept);
    BoundReport { mu_case, coarse, refined, excluded: false }
}

/// Propagates `case` on a copy of the approximated tree. An excluded outcome
/// means the case was removed by the approximation.
pub fn check_case_admissible(jt: &JunctionTree, case: &Case) -> Result<PropagationOutcome> {
    let mut work = jt.clone();
    work.enter_case(case)?;
    work.propagate()
}
