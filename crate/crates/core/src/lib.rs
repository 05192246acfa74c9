//! Multi-objective genetic programming for manifold learning.
//!
//! Evolves populations of multi-tree individuals, where each tree is an
//! interpretable constructed feature and the tree list maps a dataset into a
//! low-dimensional embedding. A decomposition-based optimizer trades off
//! embedding size against how well high-dimensional neighbor orderings
//! survive the mapping, and an evaluation harness scores the resulting
//! Pareto fronts with a cross-validated kNN accuracy proxy, a PCA baseline,
//! and hypervolume.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod gp;
pub mod moead;
pub mod neighbors;
pub mod objectives;
pub mod rng;
pub mod variation;

pub use error::{Error, Result};
