//! Estimation of the first split level of a density cluster tree.
//!
//! Given i.i.d. samples, the crate estimates the lowest level at which the
//! level sets of the underlying density fall apart into two pieces, together
//! with the two clusters, or reports that no split exists. Level sets are
//! estimated from a kernel density estimator evaluated at the samples and
//! dilated by a radius `σ`; connectivity is decided on a neighbourhood graph.
//!
//! Module map:
//! - [`kernels`]: radial kernel profiles and their tail functions.
//! - [`density`]: the kernel density estimator and its infinite-sample counterpart.
//! - [`connectivity`]: τ-connected components via union-find.
//! - [`levelset`]: the nested level-set family and grid morphology.
//! - [`splitter`]: the generic split-detection loop.
//! - [`schedule`]: parameter schedules and adaptive bandwidth selection.
//! - [`synthetic`]: ground-truth densities with known cluster structure.
//! - [`harness`]: experiments, reports and the command line.

pub mod connectivity;
pub mod density;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod levelset;
pub mod quad;
pub mod schedule;
mod spatial;
pub mod splitter;
pub mod synthetic;

pub use error::{Error, Result};
pub use kernels::{Kernel, KernelSpec, NormKind, Profile};
