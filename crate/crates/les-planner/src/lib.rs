//! Geometric sampling-based motion planning under an integral state-cost
//! metric, with a sample generator that improves cost-to-come values of
//! tree vertices by local optimization, baseline samplers (uniform,
//! informed-set, relevant-region) and global cost-to-come rewiring.
//!
//! The crate ships a benchmark harness and the `lesplan` CLI for running
//! single plans, multi-trial sampler comparisons and the local-search
//! dimensionality check.

pub mod appendix;
pub mod bench;
pub mod env;
pub mod error;
pub mod les;
mod nn;
pub mod planner;
pub mod processing;
pub mod samplers;
pub mod space;
pub mod stats;
pub mod tree;

#[cfg(test)]
pub(crate) mod testutil;

pub use crate::env::Environment;
pub use crate::error::{Error, Result};
pub use crate::planner::{plan, PlannerConfig, PlannerMetrics, SamplerKind};
pub use crate::space::{CostField, GoalRegion, SearchSpace, State};
pub use crate::tree::{Tree, VertexId};
