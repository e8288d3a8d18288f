//! The Q-Policy iteration loop.

mod config;
mod index;
mod run;
mod theory;
mod update;
mod variance;

pub use config::{LambdaMode, QPolicyConfig, EXACT_EPSILON};
pub use index::{encode_qtable, EncodedTable, IndexMap};
pub use run::{run_qpolicy, IterationRecord, QPolicyRun};
pub use theory::{
    convergence_iterations, verify_convergence_bound, verify_stability, ConvergenceReport, StabilityReport,
};
pub use update::{bellman_readout, quantum_bellman_update, BellmanReadout};
pub use variance::{estimate_lambda, update_baseline, variance_reduce, BaselineTable};
