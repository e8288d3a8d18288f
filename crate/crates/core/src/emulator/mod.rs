//! State-vector emulation of the quantum primitives: amplitude encoding,
//! shot sampling, depolarizing noise and amplitude-estimation readout.
//!
//! State preparation writes amplitudes directly, which is exactly the state a
//! Mottonen-style preparation circuit produces up to global phase. Gate
//! counts are only modelled by the resource estimator.

mod encode;
mod estimate;
mod measure;
mod noise;
mod state;

pub use encode::{amplitude_encode, shift_for_encoding, AmplitudeEncoding};
pub use estimate::{
    ae_query_cost, amplitude_estimate, EstimatorConfig, EstimatorMode, PairedCounts,
};
pub(crate) use estimate::{estimate_with, paired_shot_readout};
pub use measure::{expected_index, measure, MeasurementHistogram};
pub use noise::{apply_depolarizing, NoiseModel};
pub use state::{Pauli, StateVector, NORM_TOLERANCE};
