use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("node {0} is not in the table scope")]
    NotInScope(usize),
    #[error("table scopes do not match: {0:?} vs {1:?}")]
    ScopeMismatch(Vec<usize>, Vec<usize>),
    #[error("malformed table: {0}")]
    MalformedTable(&'static str),
    /// A nonzero numerator met a zero denominator. The propagation state is corrupt.
    #[error("inconsistent tables: nonzero value {value} divided by zero at index {index}")]
    Inconsistent { index: usize, value: f64 },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown state `{state}` for node `{node}`")]
    UnknownState { node: String, state: String },
    #[error("node index {0} out of range")]
    NodeIndex(usize),
    #[error("finding on node {0} allows no states")]
    EmptyFinding(usize),
    #[error("invalid network: {} violation(s)", .0.len())]
    InvalidNetwork(Vec<Violation>),
    #[error("joint state space {0} exceeds the enumeration guard")]
    StateSpaceTooLarge(u128),
    #[error("evidence has zero probability")]
    ZeroEvidence,
    #[error("case excluded: zero normalization constant")]
    Excluded,
    #[error("junction property violated for node {0}")]
    JunctionProperty(usize),
    #[error("malformed junction tree: {0}")]
    MalformedTree(String),
    #[error("junction tree is not consistent")]
    NotConsistent,
    #[error("approximation requires an evidence-free tree")]
    EvidenceEntered,
    #[error("epsilon must lie in [0, 1), got {0}")]
    Epsilon(f64),
}
