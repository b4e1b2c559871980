//! Discrete-event simulation of two-class (PU/SU) preemptive priority
//! queueing networks for cognitive radio systems with and without a
//! supporting cloud platform.
//!
//! * [`ge`] and [`rng`]: GE/exponential variates on reproducible substreams.
//! * [`des`]: event calendar and dispatch loop.
//! * [`network`]: the SEC → AC → CH network with PR/PRI preemption.
//! * [`metrics`]: per-replication statistics and confidence intervals.
//! * [`oracles`]: closed-form queueing results and a CTMC solver.
//! * [`experiments`]: the A–D scheme grids, config files and output.

// `!(x >= 0.0)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod des;
pub mod error;
pub mod experiments;
pub mod ge;
pub mod metrics;
pub mod network;
pub mod oracles;
pub mod rng;

pub use error::{Error, Result};
pub use ge::{exp_sample, ge_sample, ge_tau, GeParams};
pub use metrics::{aggregate, AggregateStats, RunStats};
pub use network::{run_replication, Discipline, JobClass, NetworkConfig, StationKind};
pub use rng::RngStream;
