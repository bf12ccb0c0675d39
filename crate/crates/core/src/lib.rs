//! Exact posterior probabilities of structural features in Bayesian
//! networks from complete discrete data.
//!
//! Given a categorical dataset, the engine computes the exact posterior
//! probability of any modular feature (an edge, or a conjunction of
//! required/forbidden edges) and of all `n(n-1)` directed edges at once,
//! summing over every DAG within an indegree bound by subset-lattice
//! dynamic programming. Two independent recursions (over root nodes and
//! over sink nodes) compute the same quantity and cross-check each other
//! on every run, and a brute-force enumeration oracle certifies the
//! whole pipeline on small instances.
//!
//! Pipeline: [`dataset`] loads data, [`scoring`] computes log BDe local
//! scores, [`model`] assembles per-node weights under a prior and a
//! feature, [`engine`] runs the lattice DP, [`oracle`] provides ground
//! truth for `n <= 6`, and [`cli`] wires everything into the `bnpost`
//! binary.

pub mod cli;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod model;
pub mod nodeset;
pub mod oracle;
pub mod scoring;
pub mod sum;

pub use error::{Error, Result};
pub use nodeset::{NodeSet, MAX_VARS};
