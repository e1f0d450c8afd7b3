//! Synthesis and analysis of core-periphery networks.
//!
//! The crate covers the full experimental loop:
//!
//! - [`generate`]: grow community-structured graphs with preferential
//!   attachment (plus Erdős–Rényi baselines).
//! - [`structure`]: k-shell decomposition, core selection, greedy
//!   modularity communities.
//! - [`classify`]: five-way edge roles (core-core, core-periphery,
//!   periphery-core, periphery same/cross community) and weight ordering
//!   checks.
//! - [`cascade`]: per-edge-class probabilistic spreading with full
//!   iteration traces and parallel Monte-Carlo aggregation.
//! - [`analysis`]: logistic growth fitting, plateau/ignition detection,
//!   CSV/JSON export.
//!
//! Numeric kernels are generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root pin `f64`, which is what the command-line tool uses.
//! All randomized paths take explicit seeds and are deterministic for a
//! given seed, including under `--jobs`-style parallelism.

pub mod analysis;
pub mod cascade;
pub mod classify;
pub mod config;
pub mod error;
pub mod generate;
pub mod graph;
pub mod scalar;
pub mod structure;

pub use cascade::CascadeTrace;
pub use error::{Error, Result};
pub use scalar::Real;

pub type Graph = graph::Graph<f64>;
pub type Edge = graph::Edge<f64>;
pub type LabeledGraph = generate::LabeledGraph<f64>;
pub type ProbabilityTable = cascade::ProbabilityTable<f64>;
pub type MonteCarloRun = cascade::MonteCarloRun<f64>;
pub type WeightReport = classify::WeightReport<f64>;
pub type SigmoidFit = analysis::SigmoidFit<f64>;
pub type PlateauReport = analysis::PlateauReport<f64>;
