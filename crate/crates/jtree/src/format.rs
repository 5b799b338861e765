//! Text and binary file formats: networks, junction trees, cases, finding-error
//! tables and tree statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use jtree_core::approx::CliqueRecord;
use jtree_core::junction::{Clique, Edge, TreeParts};
use jtree_core::{
    ApproximationConfig, ApproximationReport, BeliefTable, Case, Finding, Heuristic, JunctionTree, Method, NetworkSpec,
    NodeSpec, Status, TreeStats, Values, Variable,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const TREE_FORMAT: &str = "jtree-tree/1";

/// Reads a whole file, tagging failures with the path.
pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn from_json<'a, T: Deserialize<'a>>(text: &'a str, context: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Syntax {
        context: context.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    name: String,
    nodes: Vec<NodeFile>,
}

#[derive(Serialize, Deserialize)]
struct NodeFile {
    id: String,
    states: Vec<String>,
    parents: Vec<String>,
    cpt: Vec<f64>,
}

/// Parses a network document. Node order and CPT values are kept as written;
/// duplicate ids and unknown parents are rejected, other violations are left
/// to [`NetworkSpec::validate`].
pub fn parse_network(text: &str, context: &str) -> Result<NetworkSpec> {
    let file: NetworkFile = from_json(text, context)?;
    let net = NetworkSpec::new(
        file.name,
        file.nodes
            .into_iter()
            .map(|n| NodeSpec { id: n.id, states: n.states, parents: n.parents, cpt: n.cpt })
            .collect(),
    );
    net.check_references().map_err(Error::Reference)?;
    Ok(net)
}

pub fn serialize_network(net: &NetworkSpec) -> String {
    to_json(&NetworkFile {
        name: net.name.clone(),
        nodes: net
            .nodes
            .iter()
            .map(|n| NodeFile {
                id: n.id.clone(),
                states: n.states.clone(),
                parents: n.parents.clone(),
                cpt: n.cpt.clone(),
            })
            .collect(),
    })
}

pub fn load_network(path: &Path) -> Result<NetworkSpec> {
    parse_network(&read_file(path)?, &path.display().to_string())
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    scope: Vec<String>,
    shape: Vec<usize>,
    repr: String,
    values: Vec<Value>,
}

#[derive(Serialize, Deserialize)]
struct CliqueFile {
    nodes: Vec<String>,
    table: TableFile,
}

#[derive(Serialize, Deserialize)]
struct EdgeFile {
    a: usize,
    b: usize,
    separator: Vec<String>,
    table: TableFile,
}

#[derive(Serialize, Deserialize)]
struct RecordFile {
    delta: f64,
    cutoff: f64,
    removed: f64,
    mass_before: f64,
    nonzeros_before: usize,
    nonzeros_after: usize,
}

#[derive(Serialize, Deserialize)]
struct FindingErrorsFile {
    node: String,
    errors: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ApproximationFile {
    cliques: Vec<RecordFile>,
    finding_errors: Vec<FindingErrorsFile>,
}

#[derive(Serialize, Deserialize)]
struct TreeFile {
    format: String,
    name: String,
    heuristic: Option<String>,
    status: String,
    mu_mode: String,
    mass: f64,
    evidence: bool,
    epsilon: Option<f64>,
    method: Option<String>,
    global_error: f64,
    variables: Vec<VariableFile>,
    cliques: Vec<CliqueFile>,
    edges: Vec<EdgeFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    approximation: Option<ApproximationFile>,
}

#[derive(Serialize, Deserialize)]
struct VariableFile {
    id: String,
    states: Vec<String>,
}

/// A junction tree together with the report of the approximation that
/// produced it, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeDocument {
    pub tree: JunctionTree,
    pub report: Option<ApproximationReport>,
}

fn ids(vars: &[Variable], nodes: &[usize]) -> Vec<String> {
    nodes.iter().map(|&v| vars[v].id.clone()).collect()
}

fn table_file(vars: &[Variable], t: &BeliefTable) -> TableFile {
    let (repr, values) = match t.values() {
        Values::Dense(v) => ("dense", v.iter().map(|&x| Value::from(x)).collect()),
        Values::Sparse(pairs) => {
            ("sparse", pairs.iter().flat_map(|&(i, x)| [Value::from(i as u64), Value::from(x)]).collect())
        }
    };
    TableFile { scope: ids(vars, t.scope()), shape: t.shape().to_vec(), repr: repr.into(), values }
}

fn resolve_ids(index: &BTreeMap<&str, usize>, names: &[String], what: &str) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| index.get(n.as_str()).copied().ok_or_else(|| Error::Format(format!("{what}: unknown node `{n}`"))))
        .collect()
}

fn number(v: &Value, what: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::Format(format!("{what}: expected a number, found {v}")))
}

fn parse_table(index: &BTreeMap<&str, usize>, t: TableFile, what: &str) -> Result<BeliefTable> {
    let scope = resolve_ids(index, &t.scope, what)?;
    let table = match t.repr.as_str() {
        "dense" => {
            let values = t.values.iter().map(|v| number(v, what)).collect::<Result<Vec<_>>>()?;
            BeliefTable::from_dense(scope, t.shape, values)?
        }
        "sparse" => {
            if !t.values.len().is_multiple_of(2) {
                return Err(Error::Format(format!("{what}: sparse values must alternate index and value")));
            }
            let pairs = t
                .values
                .chunks(2)
                .map(|p| {
                    let i = p[0].as_u64().ok_or_else(|| {
                        Error::Format(format!("{what}: sparse index must be an integer, found {}", p[0]))
                    })?;
                    Ok((i as usize, number(&p[1], what)?))
                })
                .collect::<Result<Vec<_>>>()?;
            BeliefTable::from_sparse(scope, t.shape, pairs)?
        }
        other => return Err(Error::Format(format!("{what}: unknown table repr `{other}`"))),
    };
    Ok(table)
}

pub fn serialize_tree(doc: &TreeDocument) -> String {
    let jt = &doc.tree;
    let vars = jt.variables();
    let report = doc.report.as_ref();
    let file = TreeFile {
        format: TREE_FORMAT.into(),
        name: jt.name().into(),
        heuristic: jt.heuristic().map(|h| h.name().into()),
        status: match jt.status() {
            Status::Consistent => "consistent",
            Status::Inconsistent => "inconsistent",
        }
        .into(),
        mu_mode: if jt.mass() == 1.0 { "normalized" } else { "unnormalized" }.into(),
        mass: jt.mass(),
        evidence: jt.has_evidence(),
        epsilon: report.map(|r| r.config.epsilon),
        method: report.map(|r| r.config.method.name().into()),
        global_error: report.map_or(0.0, |r| r.global_error),
        variables: vars.iter().map(|v| VariableFile { id: v.id.clone(), states: v.states.clone() }).collect(),
        cliques: jt
            .cliques()
            .iter()
            .map(|c| CliqueFile { nodes: ids(vars, &c.nodes), table: table_file(vars, &c.table) })
            .collect(),
        edges: jt
            .edges()
            .iter()
            .map(|e| EdgeFile { a: e.a, b: e.b, separator: ids(vars, &e.separator), table: table_file(vars, &e.table) })
            .collect(),
        approximation: report.map(|r| ApproximationFile {
            cliques: r
                .cliques
                .iter()
                .map(|c| RecordFile {
                    delta: c.delta,
                    cutoff: c.cutoff,
                    removed: c.removed,
                    mass_before: c.mass_before,
                    nonzeros_before: c.nonzeros_before,
                    nonzeros_after: c.nonzeros_after,
                })
                .collect(),
            finding_errors: r
                .finding_errors
                .iter()
                .zip(vars)
                .map(|(errors, v)| FindingErrorsFile { node: v.id.clone(), errors: errors.clone() })
                .collect(),
        }),
    };
    to_json(&file)
}

pub fn parse_tree(text: &str, context: &str) -> Result<TreeDocument> {
    let file: TreeFile = from_json(text, context)?;
    let bad = |m: String| Error::Format(format!("{context}: {m}"));
    if file.format != TREE_FORMAT {
        return Err(bad(format!("unsupported format `{}`", file.format)));
    }
    let variables: Vec<Variable> =
        file.variables.into_iter().map(|v| Variable { id: v.id, states: v.states }).collect();
    let index: BTreeMap<&str, usize> = variables.iter().enumerate().map(|(i, v)| (v.id.as_str(), i)).collect();
    if index.len() != variables.len() {
        return Err(bad("duplicate variable id".into()));
    }
    let heuristic = match &file.heuristic {
        None => None,
        Some(h) => Some(Heuristic::from_name(h).ok_or_else(|| bad(format!("unknown heuristic `{h}`")))?),
    };
    let status = match file.status.as_str() {
        "consistent" => Status::Consistent,
        "inconsistent" => Status::Inconsistent,
        s => return Err(bad(format!("unknown status `{s}`"))),
    };
    let mut cliques = Vec::with_capacity(file.cliques.len());
    for (i, c) in file.cliques.into_iter().enumerate() {
        let what = format!("{context}: clique {i}");
        let nodes = resolve_ids(&index, &c.nodes, &what)?;
        cliques.push(Clique { nodes, table: parse_table(&index, c.table, &what)? });
    }
    let mut edges = Vec::with_capacity(file.edges.len());
    for (k, e) in file.edges.into_iter().enumerate() {
        let what = format!("{context}: edge {k}");
        let separator = resolve_ids(&index, &e.separator, &what)?;
        edges.push(Edge { a: e.a, b: e.b, separator, table: parse_table(&index, e.table, &what)? });
    }
    let report = match (file.approximation, file.epsilon, &file.method) {
        (None, _, _) => None,
        (Some(a), Some(epsilon), Some(method)) => {
            let method = Method::from_name(method).ok_or_else(|| bad(format!("unknown method `{method}`")))?;
            if a.finding_errors.len() != variables.len() {
                return Err(bad("finding errors must list every variable".into()));
            }
            let mut finding_errors = Vec::with_capacity(variables.len());
            for (f, v) in a.finding_errors.into_iter().zip(&variables) {
                if f.node != v.id || f.errors.len() != v.states.len() {
                    return Err(bad(format!("finding errors for `{}` do not match the variables", f.node)));
                }
                finding_errors.push(f.errors);
            }
            Some(ApproximationReport {
                config: ApproximationConfig::new(epsilon, method)?,
                cliques: a
                    .cliques
                    .into_iter()
                    .map(|c| CliqueRecord {
                        delta: c.delta,
                        cutoff: c.cutoff,
                        removed: c.removed,
                        mass_before: c.mass_before,
                        nonzeros_before: c.nonzeros_before,
                        nonzeros_after: c.nonzeros_after,
                    })
                    .collect(),
                global_error: file.global_error,
                finding_errors,
            })
        }
        _ => return Err(bad("approximation section needs epsilon and method".into())),
    };
    let tree = JunctionTree::from_parts(TreeParts {
        name: file.name,
        variables,
        heuristic,
        cliques,
        edges,
        status,
        mass: file.mass,
        evidence: file.evidence,
    })?;
    Ok(TreeDocument { tree, report })
}

pub fn load_tree(path: &Path) -> Result<TreeDocument> {
    parse_tree(&read_file(path)?, &path.display().to_string())
}

#[derive(Serialize, Deserialize)]
struct CaseFile {
    findings: Vec<FindingFile>,
}

#[derive(Serialize, Deserialize)]
struct FindingFile {
    node: String,
    states: Vec<String>,
}

/// Named findings `(node id, allowed state labels)` before resolution.
pub type NamedFindings = Vec<(String, Vec<String>)>;

pub fn parse_case(text: &str, context: &str) -> Result<NamedFindings> {
    let file: CaseFile = from_json(text, context)?;
    Ok(file.findings.into_iter().map(|f| (f.node, f.states)).collect())
}

pub fn serialize_case(findings: &NamedFindings) -> String {
    to_json(&CaseFile {
        findings: findings.iter().map(|(n, s)| FindingFile { node: n.clone(), states: s.clone() }).collect(),
    })
}

/// Parses `node=state`; several states may be separated by `|`.
pub fn parse_evidence_flag(flag: &str) -> Result<(String, Vec<String>)> {
    let (node, states) =
        flag.split_once('=').ok_or_else(|| Error::Format(format!("evidence `{flag}` must look like node=state")))?;
    let states: Vec<String> = states.split('|').map(str::to_string).collect();
    if node.is_empty() || states.iter().any(String::is_empty) {
        Err(Error::Format(format!("evidence `{flag}` must look like node=state")))
    } else {
        Ok((node.to_string(), states))
    }
}

/// Resolves named findings against a tree. Repeated nodes intersect.
pub fn resolve_case(jt: &JunctionTree, findings: &NamedFindings) -> Result<Case> {
    let mut case = Case::new();
    for (node, states) in findings {
        let mut v = None;
        let mut indices = Vec::with_capacity(states.len());
        for s in states {
            let (n, i) = jt.resolve_state(node, s)?;
            v = Some(n);
            indices.push(i);
        }
        let v = v.ok_or_else(|| Error::Format(format!("finding on `{node}` lists no states")))?;
        case.add(Finding::new(v, indices)?);
    }
    Ok(case)
}

/// `node_id,state_label,p_f_and_not_A` for every node state.
pub fn finding_errors_csv(jt: &JunctionTree, report: &ApproximationReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["node_id", "state_label", "p_f_and_not_A"]).expect("in-memory write");
    for (v, errors) in jt.variables().iter().zip(&report.finding_errors) {
        for (label, e) in v.states.iter().zip(errors) {
            w.write_record([v.id.as_str(), label.as_str(), &e.to_string()]).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 input")
}

fn histogram_text(stats: &TreeStats) -> String {
    stats.size_histogram.iter().map(|(size, count)| format!("{size}:{count}")).collect::<Vec<_>>().join(" ")
}

/// One `key=value` line per statistic.
pub fn stats_record(stats: &TreeStats) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "clique_count={}", stats.clique_count);
    let _ = writeln!(s, "size_histogram={}", histogram_text(stats));
    let _ = writeln!(s, "total_state_space={}", stats.total_state_space);
    let _ = writeln!(s, "max_clique_state_space={}", stats.max_clique_state_space);
    let _ = writeln!(s, "zero_fraction={}", stats.zero_fraction);
    s
}

/// The same statistics as a CSV header and one row.
pub fn stats_csv(stats: &TreeStats) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["clique_count", "size_histogram", "total_state_space", "max_clique_state_space", "zero_fraction"])
        .expect("in-memory write");
    w.write_record([
        stats.clique_count.to_string(),
        histogram_text(stats),
        stats.total_state_space.to_string(),
        stats.max_clique_state_space.to_string(),
        stats.zero_fraction.to_string(),
    ])
    .expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 input")
}

pub fn stats_json(stats: &TreeStats) -> String {
    let histogram: BTreeMap<String, usize> = stats.size_histogram.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    to_json(&serde_json::json!({
        "clique_count": stats.clique_count,
        "size_histogram": histogram,
        "total_state_space": stats.total_state_space.to_string(),
        "max_clique_state_space": stats.max_clique_state_space.to_string(),
        "zero_fraction": stats.zero_fraction,
    }))
}

const BINARY_MAGIC: &[u8; 4] = b"JTB1";
const TAG_DENSE: u8 = 0;
const TAG_SPARSE: u8 = 1;

/// Binary encoding of every clique and separator table.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedTables {
    pub bytes: Vec<u8>,
    /// Bytes taken by table entries, excluding headers.
    pub payload_bytes: usize,
}

/// Encodes the tables of `jt` in clique then edge order. Each table is a tag
/// byte, its rank, scope node indices, shape and entry count as little-endian
/// u64, then the entries: f64 values when dense, (u64 index, f64 value)
/// pairs when sparse.
pub fn encode_tables(jt: &JunctionTree) -> EncodedTables {
    let tables: Vec<&BeliefTable> =
        jt.cliques().iter().map(|c| &c.table).chain(jt.edges().iter().map(|e| &e.table)).collect();
    let mut bytes = Vec::from(&BINARY_MAGIC[..]);
    bytes.extend((tables.len() as u64).to_le_bytes());
    let mut payload_bytes = 0;
    for t in tables {
        let put = |bytes: &mut Vec<u8>, x: usize| bytes.extend((x as u64).to_le_bytes());
        bytes.push(if t.is_sparse() { TAG_SPARSE } else { TAG_DENSE });
        put(&mut bytes, t.scope().len());
        t.scope().iter().for_each(|&v| put(&mut bytes, v));
        t.shape().iter().for_each(|&k| put(&mut bytes, k));
        let start = bytes.len() + 8;
        match t.values() {
            Values::Dense(v) => {
                put(&mut bytes, v.len());
                v.iter().for_each(|x| bytes.extend(x.to_le_bytes()));
            }
            Values::Sparse(pairs) => {
                put(&mut bytes, pairs.len());
                for &(i, x) in pairs {
                    put(&mut bytes, i);
                    bytes.extend(x.to_le_bytes());
                }
            }
        }
        payload_bytes += bytes.len() - start;
    }
    EncodedTables { bytes, payload_bytes }
}

/// Inverse of [`encode_tables`].
pub fn decode_tables(bytes: &[u8]) -> Result<Vec<BeliefTable>> {
    let truncated = || Error::Format("binary tables: truncated input".into());
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes.get(pos..pos + n).ok_or_else(truncated)?;
        pos += n;
        Ok(s)
    };
    if take(4)? != BINARY_MAGIC {
        return Err(Error::Format("binary tables: bad magic".into()));
    }
    let word = |s: &[u8]| u64::from_le_bytes(s.try_into().expect("eight bytes")) as usize;
    let count = word(take(8)?);
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let tag = take(1)?[0];
        let rank = word(take(8)?);
        let scope = (0..rank).map(|_| take(8).map(word)).collect::<Result<Vec<_>>>()?;
        let shape = (0..rank).map(|_| take(8).map(word)).collect::<Result<Vec<_>>>()?;
        let n = word(take(8)?);
        let table = match tag {
            TAG_DENSE => {
                let values = (0..n)
                    .map(|_| take(8).map(|s| f64::from_le_bytes(s.try_into().unwrap())))
                    .collect::<Result<_>>()?;
                BeliefTable::from_dense(scope, shape, values)?
            }
            TAG_SPARSE => {
                let pairs = (0..n)
                    .map(|_| {
                        let i = word(take(8)?);
                        Ok((i, f64::from_le_bytes(take(8)?.try_into().unwrap())))
                    })
                    .collect::<Result<_>>()?;
                BeliefTable::from_sparse(scope, shape, pairs)?
            }
            t => return Err(Error::Format(format!("binary tables: unknown tag {t}"))),
        };
        out.push(table);
    }
    if pos != bytes.len() {
        return Err(Error::Format("binary tables: trailing bytes".into()));
    }
    Ok(out)
}
