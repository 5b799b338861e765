//! File formats, synthetic networks and the benchmark harness around
//! [`jtree_core`].

pub mod bench;
pub mod error;
pub mod format;
pub mod synth;

pub use error::{Error, Result};
