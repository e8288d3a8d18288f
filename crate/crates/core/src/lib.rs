//! Policy iteration with emulated quantum Bellman evaluation.
//!
//! The crate is organised bottom-up: [`mdp`] holds tabular models and exact
//! solvers, [`emulator`] the state-vector primitives and amplitude-estimation
//! readout, [`engine`] the iteration loop, [`experiments`] the multi-seed
//! studies and [`cli`] the command-line front end.

pub mod cli;
pub mod emulator;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod mdp;
pub mod output;
pub mod rng;

pub use emulator::{amplitude_encode, amplitude_estimate, measure, EstimatorConfig, EstimatorMode, NoiseModel, StateVector};
pub use engine::{run_qpolicy, IterationRecord, LambdaMode, QPolicyConfig, QPolicyRun};
pub use error::{QPolicyError, Result};
pub use mdp::{build_frozenlake, build_gridworld, value_iteration, Policy, QTable, TabularMdp};
