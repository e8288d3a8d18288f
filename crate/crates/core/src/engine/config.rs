use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::emulator::{EstimatorConfig, EstimatorMode};
use crate::error::{invalid_arg, Result};
use crate::mdp::TabularMdp;

/// How the control-variate coefficient is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    /// `q_hat = q_tilde + beta * (f - mean(f))` with a user-supplied `beta`.
    FixedBeta,
    /// Per-readout coefficient `-Cov/Var` estimated from paired shot samples of
    /// the readout and of the baseline control variate.
    #[default]
    AutoLambda,
}

/// Settings of one Q-Policy run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QPolicyConfig {
    /// Readout regime; `estimator.epsilon` is the AE precision.
    pub estimator: EstimatorConfig,
    pub beta: f64,
    /// EMA rate of the baseline update.
    pub eta: f64,
    pub lambda_mode: LambdaMode,
    pub max_iterations: usize,
    /// Stop once `max |q_hat - q| < convergence_tol`.
    pub convergence_tol: f64,
    /// Overrides the model's discount when set.
    pub gamma: Option<f64>,
    /// Run seed; per-readout streams are split from it.
    pub seed: u64,
    /// Independent repeat readouts used for the Q-variance metric (0 disables).
    pub q_variance_repeats: usize,
    /// Read states whose backup targets are all equal classically, at no cost.
    pub skip_degenerate_rows: bool,
}

impl Default for QPolicyConfig {
    fn default() -> Self {
        Self {
            estimator: EstimatorConfig::default(),
            beta: 0.0,
            eta: 0.5,
            lambda_mode: LambdaMode::AutoLambda,
            max_iterations: 50,
            convergence_tol: 1e-9,
            gamma: None,
            seed: 0,
            q_variance_repeats: 10,
            skip_degenerate_rows: true,
        }
    }
}

/// AE precision used for the noiseless limit.
pub const EXACT_EPSILON: f64 = 1e-12;

impl QPolicyConfig {
    /// Noiseless AE readout with `epsilon = 1e-12`.
    pub fn exact() -> Self {
        Self {
            estimator: EstimatorConfig::ae_oracle(EXACT_EPSILON, 1.0),
            max_iterations: 2000,
            convergence_tol: 1e-9,
            ..Self::default()
        }
    }

    /// The model with `gamma` overridden when the config sets one.
    pub fn apply_gamma<'a>(&self, mdp: &'a TabularMdp) -> Result<Cow<'a, TabularMdp>> {
        match self.gamma {
            Some(g) if g != mdp.gamma() => Ok(Cow::Owned(mdp.with_gamma(g)?)),
            _ => Ok(Cow::Borrowed(mdp)),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.estimator.epsilon
    }

    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        if self.estimator.mode == EstimatorMode::ShotSampling && !(self.estimator.epsilon > 0.0) {
            return Err(invalid_arg("epsilon must be positive"));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(invalid_arg(format!("eta must lie in [0, 1], got {}", self.eta)));
        }
        if !self.beta.is_finite() {
            return Err(invalid_arg("beta must be finite"));
        }
        if self.max_iterations == 0 {
            return Err(invalid_arg("max_iterations must be at least 1"));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(invalid_arg("convergence_tol must be positive"));
        }
        if let Some(g) = self.gamma {
            if !(0.0..1.0).contains(&g) {
                return Err(invalid_arg(format!("gamma must lie in [0, 1), got {g}")));
            }
        }
        if self.q_variance_repeats == 1 {
            return Err(invalid_arg("q_variance_repeats must be 0 or at least 2"));
        }
        Ok(())
    }
}
