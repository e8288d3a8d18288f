use serde::{Deserialize, Serialize};

use crate::emulator::ae_query_cost;
use crate::engine::QPolicyConfig;
use crate::error::{invalid_arg, Result};
use crate::mdp::TabularMdp;

/// Gate-model constants. The defaults are calibrated so that the 4x4
/// GridWorld (sparsity 4) costs 50 gates per Bellman update and about 5,600
/// gates per iteration at `epsilon = 0.01`; they are not derived quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceCalibration {
    pub c_gate: f64,
    pub c_overhead: f64,
}

impl Default for ResourceCalibration {
    fn default() -> Self {
        Self {
            c_gate: 12.5,
            c_overhead: 1.12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResourceEstimate {
    /// Address register only; ancilla and oracle workspace are not counted.
    pub qubits: usize,
    pub gates_per_bellman_update: u64,
    pub gates_per_iteration: u64,
    pub seconds_per_iteration_at_1khz: f64,
    pub kappa: f64,
    pub sparsity_d: usize,
    pub calibration: ResourceCalibration,
}

/// `ceil(log2(num_pairs))`, at least 1.
pub fn qubits_for(num_pairs: usize) -> usize {
    (num_pairs.max(2).next_power_of_two().trailing_zeros()) as usize
}

pub fn estimate_resources(mdp: &TabularMdp, config: &QPolicyConfig, kappa: f64) -> Result<ResourceEstimate> {
    estimate_resources_with(mdp, config, kappa, ResourceCalibration::default())
}

pub fn estimate_resources_with(
    mdp: &TabularMdp,
    config: &QPolicyConfig,
    kappa: f64,
    calibration: ResourceCalibration,
) -> Result<ResourceEstimate> {
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(invalid_arg(format!("kappa must be at least 1, got {kappa}")));
    }
    let eps = config.epsilon();
    if !(eps > 0.0) {
        return Err(invalid_arg("epsilon must be positive"));
    }
    let d = mdp.sparsity();
    let per_update = (calibration.c_gate * d as f64 * kappa).round() as u64;
    let readouts = ae_query_cost(config.estimator.c_ae, eps);
    let per_iteration = (per_update as f64 * readouts as f64 * calibration.c_overhead).round() as u64;
    Ok(ResourceEstimate {
        qubits: qubits_for(mdp.num_pairs()),
        gates_per_bellman_update: per_update,
        gates_per_iteration: per_iteration,
        seconds_per_iteration_at_1khz: per_iteration as f64 / 1000.0,
        kappa,
        sparsity_d: d,
        calibration,
    })
}
