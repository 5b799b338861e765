//! Exact and approximate inference in causal probabilistic networks using
//! junction trees of belief universes.
//!
//! The pipeline is: validate a [`NetworkSpec`], [`compile`] it into a
//! consistent [`JunctionTree`], enter a [`Case`] and propagate, or first
//! [`approximate`] the tree to trade a bounded amount of probability mass for
//! sparser tables.
#![no_std]

extern crate alloc;

pub mod approx;
pub mod engine;
pub mod error;
pub mod graph;
pub mod junction;
pub mod model;
pub mod oracle;
pub mod table;

pub use approx::{
    approximate, check_case_admissible, worst_case_bound, ApproximationConfig, ApproximationReport, BoundReport, Method,
};
pub use engine::{Case, Normalization, PropagationOutcome};
pub use error::{Error, Result};
pub use graph::{Heuristic, TriangulationResult, UndirectedGraph};
pub use junction::{compile, JunctionTree, Status, TreeStats, Variable};
pub use model::{NetworkSpec, NodeSpec, ValidationReport, Violation};
pub use table::{BeliefTable, Finding, Values};
