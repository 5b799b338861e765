//! Storage, time and accuracy of approximated trees over an ε sweep.

use std::time::Instant;

use jtree_core::oracle::{enumerate_joint, JointTable, ENUMERATION_GUARD};
use jtree_core::{
    approximate, compile, worst_case_bound, ApproximationConfig, Case, Finding, Heuristic, JunctionTree, Method,
    NetworkSpec,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::encode_tables;

pub const SCHEMA: &str = "# jtree-bench v1";

/// Smallest number of timed repetitions per case.
pub const MIN_REPS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub heuristic: Heuristic,
    pub start: usize,
    pub epsilons: Vec<f64>,
    pub method: Method,
    pub cases: usize,
    /// Findings per case are drawn uniformly from `1..=max_findings`.
    pub max_findings: usize,
    pub seed: u64,
    /// Nodes findings may be placed on; leaves when `None`.
    pub observable: Option<Vec<usize>>,
    pub reps: usize,
    /// Measure propagation time. Off keeps the output byte-deterministic.
    pub timing: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            heuristic: Heuristic::MinSize,
            start: 0,
            epsilons: vec![0.0, 1e-5, 1e-4, 1e-3, 1e-2],
            method: Method::Halving,
            cases: 10,
            max_findings: 3,
            seed: 0,
            observable: None,
            reps: MIN_REPS,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub network: String,
    pub heuristic: &'static str,
    pub method: &'static str,
    pub epsilon: f64,
    pub global_error: f64,
    /// Table entry bytes of the encoded approximated tree.
    pub payload_bytes: usize,
    /// Encoded size including table headers.
    pub total_bytes: usize,
    /// Payload of the unapproximated tree stored densely.
    pub dense_bytes: usize,
    pub storage_ratio: f64,
    pub nonzeros: usize,
    pub excluded_cases: usize,
    pub max_error: f64,
    pub mean_error: f64,
    pub within_budget: bool,
    /// Mean over cases of the median propagation time, in nanoseconds.
    pub time_ns: Option<f64>,
    /// `time_ns` over the same measurement on the dense exact tree.
    pub time_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseRow {
    pub epsilon: f64,
    pub case: usize,
    pub findings: String,
    pub mu_case: f64,
    pub coarse_bound: f64,
    pub refined_bound: f64,
    pub excluded: bool,
    /// Posterior error against the exact tree over non-evidence nodes.
    pub max_error: Option<f64>,
    pub mean_error: Option<f64>,
    /// Posterior error against joint enumeration, when within the guard.
    pub oracle_max_error: Option<f64>,
    pub time_ns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutput {
    pub summaries: Vec<SummaryRow>,
    pub cases: Vec<CaseRow>,
}

fn leaves(net: &NetworkSpec) -> Vec<usize> {
    let mut has_child = vec![false; net.len()];
    for n in &net.nodes {
        for p in &n.parents {
            if let Some(i) = net.node_index(p) {
                has_child[i] = true;
            }
        }
    }
    (0..net.len()).filter(|&i| !has_child[i]).collect()
}

/// Draws `count` cases of single-state findings on `observable`, rejecting
/// impossible ones against the exact tree.
pub fn draw_cases(
    exact: &JunctionTree,
    observable: &[usize],
    count: usize,
    max_findings: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Case>> {
    if count > 0 && (observable.is_empty() || max_findings == 0) {
        return Err(Error::Generator("cases need observable nodes and at least one finding".into()));
    }
    let cards = exact.cardinalities();
    let mut cases = Vec::with_capacity(count);
    let mut attempts = 0;
    while cases.len() < count {
        attempts += 1;
        if attempts > 1000 * count {
            return Err(Error::Generator("too many impossible cases drawn".into()));
        }
        let k = rng.random_range(1..=max_findings.min(observable.len()));
        let mut nodes: Vec<usize> = sample(rng, observable.len(), k).into_iter().map(|i| observable[i]).collect();
        nodes.sort_unstable();
        let case = Case::from_findings(nodes.into_iter().map(|v| Finding::single(v, rng.random_range(0..cards[v]))));
        let mut jt = exact.clone();
        jt.enter_case(&case)?;
        if !jt.propagate()?.excluded {
            cases.push(case);
        }
    }
    Ok(cases)
}

fn case_label(jt: &JunctionTree, case: &Case) -> String {
    let vars = jt.variables();
    case.findings()
        .map(|(v, states)| {
            let labels: Vec<&str> = states.iter().map(|&s| vars[v].states[s].as_str()).collect();
            format!("{}={}", vars[v].id, labels.join("|"))
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn propagated(jt: &JunctionTree, case: &Case) -> Result<(JunctionTree, jtree_core::PropagationOutcome)> {
    let mut work = jt.clone();
    work.enter_case(case)?;
    let out = work.propagate()?;
    Ok((work, out))
}

/// Median wall time in nanoseconds of entering each case and propagating,
/// indexed `[tree][case]`. Within every repetition the trees are timed
/// round-robin so drift affects them alike; the first repetition is an
/// untimed warm-up. No cases times the empty case.
fn case_times_ns(trees: &[&JunctionTree], cases: &[Case], reps: usize) -> Result<Vec<Vec<f64>>> {
    let empty = [Case::new()];
    let cases = if cases.is_empty() { &empty[..] } else { cases };
    let mut out = vec![Vec::with_capacity(cases.len()); trees.len()];
    for case in cases {
        let mut times = vec![Vec::with_capacity(reps); trees.len()];
        for rep in 0..=reps {
            for (t, jt) in trees.iter().enumerate() {
                let mut work = (*jt).clone();
                let start = Instant::now();
                work.enter_case(case)?;
                work.propagate()?;
                let elapsed = start.elapsed().as_nanos() as f64;
                std::hint::black_box(&work);
                if rep > 0 {
                    times[t].push(elapsed);
                }
            }
        }
        for (t, mut ts) in times.into_iter().enumerate() {
            ts.sort_by(f64::total_cmp);
            out[t].push(ts[ts.len() / 2]);
        }
    }
    Ok(out)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn posterior_errors(reference: &[Vec<f64>], got: &JunctionTree, case: &Case) -> Result<(f64, f64)> {
    let mut max = 0.0f64;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (v, want) in reference.iter().enumerate() {
        if case.allowed(v).is_some() {
            continue;
        }
        for (a, b) in want.iter().zip(got.marginal(v)?) {
            let d = (a - b).abs();
            max = max.max(d);
            sum += d;
            count += 1;
        }
    }
    Ok((max, if count == 0 { 0.0 } else { sum / count as f64 }))
}

fn oracle_error(joint: &JointTable, got: &JunctionTree, case: &Case) -> Result<f64> {
    let mut max = 0.0f64;
    for v in 0..joint.cards().len() {
        for (a, b) in joint.posterior(case, v)?.iter().zip(got.marginal(v)?) {
            max = max.max((a - b).abs());
        }
    }
    Ok(max)
}

pub fn run_bench(net: &NetworkSpec, cfg: &BenchConfig) -> Result<BenchOutput> {
    let reps = cfg.reps.max(MIN_REPS);
    let configs = cfg
        .epsilons
        .iter()
        .map(|&e| ApproximationConfig::new(e, cfg.method))
        .collect::<jtree_core::Result<Vec<_>>>()?;
    let exact = compile(net, cfg.heuristic, cfg.start)?;
    let dense_bytes = exact.dense_bytes();
    let observable = cfg.observable.clone().unwrap_or_else(|| leaves(net));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cases = draw_cases(&exact, &observable, cfg.cases, cfg.max_findings, &mut rng)?;

    let cards = exact.cardinalities();
    let joint_size = cards.iter().fold(1u128, |a, &c| a.saturating_mul(c as u128));
    let joint = if joint_size <= ENUMERATION_GUARD { Some(enumerate_joint(net)?) } else { None };
    let reference: Vec<Vec<Vec<f64>>> = cases
        .iter()
        .map(|c| {
            let (jt, _) = propagated(&exact, c)?;
            (0..cards.len()).map(|v| Ok(jt.marginal(v)?)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let approximations = configs.iter().map(|c| approximate(&exact, c)).collect::<jtree_core::Result<Vec<_>>>()?;
    // Row 0 is the dense exact baseline, row k + 1 the k-th approximation.
    let times = if cfg.timing {
        let trees: Vec<&JunctionTree> =
            std::iter::once(&exact).chain(approximations.iter().map(|(jt, _)| jt)).collect();
        Some(case_times_ns(&trees, &cases, reps)?)
    } else {
        None
    };
    let baseline_ns = times.as_ref().map(|t| mean(&t[0]));

    let mut summaries = Vec::with_capacity(configs.len());
    let mut case_rows = Vec::with_capacity(configs.len() * cases.len());
    for (k, (config, (approx, report))) in configs.iter().zip(&approximations).enumerate() {
        let tree_times = times.as_ref().map(|t| &t[k + 1]);
        let encoded = encode_tables(approx);
        let mut excluded_cases = 0;
        let mut max_error = 0.0f64;
        let mut error_sum = 0.0;
        let mut measured = 0usize;
        for (i, case) in cases.iter().enumerate() {
            let (jt, out) = propagated(approx, case)?;
            let bound = worst_case_bound(report, case, out.normalization);
            let (max, mean, oracle) = if out.excluded {
                excluded_cases += 1;
                (None, None, None)
            } else {
                let (max, mean) = posterior_errors(&reference[i], &jt, case)?;
                max_error = max_error.max(max);
                error_sum += mean;
                measured += 1;
                let oracle = joint.as_ref().map(|j| oracle_error(j, &jt, case)).transpose()?;
                (Some(max), Some(mean), oracle)
            };
            let time_ns = tree_times.map(|t| t[i]);
            case_rows.push(CaseRow {
                epsilon: config.epsilon,
                case: i,
                findings: case_label(approx, case),
                mu_case: bound.mu_case,
                coarse_bound: bound.coarse,
                refined_bound: bound.refined,
                excluded: out.excluded,
                max_error: max,
                mean_error: mean,
                oracle_max_error: oracle,
                time_ns,
            });
        }
        let time_ns = tree_times.map(|t| mean(t));
        summaries.push(SummaryRow {
            network: net.name.clone(),
            heuristic: cfg.heuristic.name(),
            method: cfg.method.name(),
            epsilon: config.epsilon,
            global_error: report.global_error,
            payload_bytes: encoded.payload_bytes,
            total_bytes: encoded.bytes.len(),
            dense_bytes,
            storage_ratio: encoded.payload_bytes as f64 / dense_bytes as f64,
            nonzeros: approx.cliques().iter().map(|c| c.table.nnz()).sum::<usize>()
                + approx.edges().iter().map(|e| e.table.nnz()).sum::<usize>(),
            excluded_cases,
            max_error,
            mean_error: if measured == 0 { 0.0 } else { error_sum / measured as f64 },
            within_budget: report.within_local_budget(),
            time_ns,
            time_ratio: time_ns.zip(baseline_ns).map(|(t, b)| t / b),
        });
    }
    Ok(BenchOutput { summaries, cases: case_rows })
}

struct CsvRow<'a> {
    kind: &'static str,
    network: &'a str,
    heuristic: &'static str,
    method: &'static str,
    epsilon: f64,
    case: Option<usize>,
    findings: Option<&'a str>,
    global_error: Option<f64>,
    payload_bytes: Option<usize>,
    total_bytes: Option<usize>,
    dense_bytes: Option<usize>,
    storage_ratio: Option<f64>,
    nonzeros: Option<usize>,
    excluded_cases: Option<usize>,
    mu_case: Option<f64>,
    coarse_bound: Option<f64>,
    refined_bound: Option<f64>,
    excluded: Option<bool>,
    max_error: Option<f64>,
    mean_error: Option<f64>,
    oracle_max_error: Option<f64>,
    within_budget: Option<bool>,
}

const TIME_COLUMNS: [&str; 2] = ["time_ns", "time_ratio"];

/// CSV with a schema comment line, one summary row per ε followed by its
/// case rows. Time columns appear only when the bench measured time.
pub fn to_csv(out: &BenchOutput) -> String {
    let timed = out.summaries.iter().any(|s| s.time_ns.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = vec![
        "kind",
        "network",
        "heuristic",
        "method",
        "epsilon",
        "case",
        "findings",
        "global_error",
        "payload_bytes",
        "total_bytes",
        "dense_bytes",
        "storage_ratio",
        "nonzeros",
        "excluded_cases",
        "mu_case",
        "coarse_bound",
        "refined_bound",
        "excluded",
        "max_error",
        "mean_error",
        "oracle_max_error",
        "within_budget",
    ];
    if timed {
        header.extend(TIME_COLUMNS);
    }
    w.write_record(&header).expect("in-memory write");
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for s in &out.summaries {
        let row = CsvRow {
            kind: "summary",
            network: &s.network,
            heuristic: s.heuristic,
            method: s.method,
            epsilon: s.epsilon,
            case: None,
            findings: None,
            global_error: Some(s.global_error),
            payload_bytes: Some(s.payload_bytes),
            total_bytes: Some(s.total_bytes),
            dense_bytes: Some(s.dense_bytes),
            storage_ratio: Some(s.storage_ratio),
            nonzeros: Some(s.nonzeros),
            excluded_cases: Some(s.excluded_cases),
            mu_case: None,
            coarse_bound: None,
            refined_bound: None,
            excluded: None,
            max_error: Some(s.max_error),
            mean_error: Some(s.mean_error),
            oracle_max_error: None,
            within_budget: Some(s.within_budget),
        };
        write_row(&mut w, &row, timed.then(|| [opt(s.time_ns), opt(s.time_ratio)]));
        for c in out.cases.iter().filter(|c| c.epsilon.to_bits() == s.epsilon.to_bits()) {
            let row = CsvRow {
                kind: "case",
                network: &s.network,
                heuristic: s.heuristic,
                method: s.method,
                epsilon: c.epsilon,
                case: Some(c.case),
                findings: Some(&c.findings),
                global_error: None,
                payload_bytes: None,
                total_bytes: None,
                dense_bytes: None,
                storage_ratio: None,
                nonzeros: None,
                excluded_cases: None,
                mu_case: Some(c.mu_case),
                coarse_bound: Some(c.coarse_bound),
                refined_bound: Some(c.refined_bound),
                excluded: Some(c.excluded),
                max_error: c.max_error,
                mean_error: c.mean_error,
                oracle_max_error: c.oracle_max_error,
                within_budget: None,
            };
            write_row(&mut w, &row, timed.then(|| [opt(c.time_ns), String::new()]));
        }
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 output");
    format!("{SCHEMA}\n{body}")
}

fn write_row(w: &mut csv::Writer<Vec<u8>>, row: &CsvRow, time: Option<[String; 2]>) {
    let mut fields = csv_fields(row);
    if let Some(t) = time {
        fields.extend(t);
    }
    w.write_record(&fields).expect("in-memory write");
}

fn csv_fields(row: &CsvRow) -> Vec<String> {
    let f = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let u = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
    let b = |x: Option<bool>| x.map(|v| v.to_string()).unwrap_or_default();
    vec![
        row.kind.into(),
        row.network.into(),
        row.heuristic.into(),
        row.method.into(),
        row.epsilon.to_string(),
        u(row.case),
        row.findings.unwrap_or_default().into(),
        f(row.global_error),
        u(row.payload_bytes),
        u(row.total_bytes),
        u(row.dense_bytes),
        f(row.storage_ratio),
        u(row.nonzeros),
        u(row.excluded_cases),
        f(row.mu_case),
        f(row.coarse_bound),
        f(row.refined_bound),
        b(row.excluded),
        f(row.max_error),
        f(row.mean_error),
        f(row.oracle_max_error),
        b(row.within_budget),
    ]
}

pub fn to_json(out: &BenchOutput) -> String {
    let mut s = serde_json::to_string_pretty(&serde_json::json!({
        "schema": SCHEMA.trim_start_matches("# "),
        "summaries": out.summaries,
        "cases": out.cases,
    }))
    .expect("serializable rows");
    s.push('\n');
    s
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mean) * (b - mean)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mean).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - mean).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}
