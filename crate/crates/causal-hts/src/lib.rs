//! Causal structure discovery for additive-noise models: hierarchical
//! topological sorting of observational data and conditional-independence
//! edge pruning, plus the synthetic benchmarks used to validate them.
//!
//! The crate splits into:
//!
//! - [`graph`]: DAGs, vertex orders, d-separation, and accuracy metrics;
//! - [`synth`]: linear and quadratic structural-equation samplers;
//! - [`stats`]: residual extractors and independence tests;
//! - [`lhts`]: the linear (residual-pattern) hierarchical sort;
//! - [`nhts`]: the nonlinear (kernel-regression) hierarchical sort;
//! - [`ed`]: edge discovery over a sorted vertex set;
//! - [`harness`]: seeded benchmark trials with CSV/JSON emission.
//!
//! Every sort and pruner runs either against data or against a graph-truth
//! verdict oracle, which the test suite uses to check exact recovery on
//! enumerated DAGs.

mod bitset;
mod error;
mod par;

pub mod ed;
pub mod graph;
pub mod harness;
pub mod lhts;
pub mod nhts;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use par::configure_threads_from_env;
