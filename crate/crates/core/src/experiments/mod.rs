//! Multi-seed studies built on the iteration engine.

mod metrics;
mod resources;
mod stats;
mod studies;

pub use metrics::compute_bellman_error;
pub use resources::{estimate_resources, estimate_resources_with, qubits_for, ResourceCalibration, ResourceEstimate};
pub use stats::{log_log_slope, summarize, SummaryStats};
pub use studies::{
    run_ablation, run_mc_policy_iteration, run_noise_comparison, run_query_complexity_study, run_scaling_study,
    run_update_rule_ablation, AblationCell, AblationGrid, MethodArm, NoiseArm, QueryComparison, ScalingPoint,
    ScalingStudy, SeedRun, Variant, VariantArm,
};
