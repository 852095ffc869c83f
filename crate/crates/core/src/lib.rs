//! Budget-aware what-if index tuning with verified early stopping.
//!
//! The crate simulates an index tuner that may issue at most B what-if
//! optimizer calls against a synthetic cost oracle. While the tuner runs,
//! lower and upper bounds on the final workload cost are maintained from
//! per-query call information, and an early-stopping verifier halts the run
//! once the bounds prove that finishing the budget could improve the result
//! by at most epsilon.
//!
//! Module map:
//! - [`workload`]: columns, queries, candidate indexes, configurations.
//! - [`generate`]: seeded synthetic workload generator and presets.
//! - [`features`]: feature vectors and query-projected similarity.
//! - [`oracle`]: coverage cost oracle, budgeted wrapper, cost cache.
//! - [`mci`]: per-call upper bounds on marginal cost improvements.
//! - [`bounds`]: workload-level lower/upper bounds and index interaction.
//! - [`esv`]: early-stopping verification schemes and the decision curve.
//! - [`tuner`]: two-phase greedy and MCTS drivers.
//! - [`artifacts`]: run directory serialization (calls.csv, curve.csv, ...).
//! - [`metrics`], [`sweep`], [`verify`]: evaluation harness.

pub mod artifacts;
pub mod bounds;
pub mod error;
pub mod esv;
pub mod features;
pub mod generate;
pub mod mci;
pub mod metrics;
pub mod oracle;
pub mod sweep;
pub mod tuner;
pub mod verify;
pub mod workload;

pub use error::{EscError, Result};
