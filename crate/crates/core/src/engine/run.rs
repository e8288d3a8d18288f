use serde::Serialize;

use super::config::{LambdaMode, QPolicyConfig};
use super::index::{encode_qtable, IndexMap};
use super::update::{bellman_readout, BellmanReadout};
use super::variance::{update_baseline, variance_reduce, BaselineTable};
use crate::error::Result;
use crate::experiments::compute_bellman_error;
use crate::mdp::{policy_improve, Policy, QTable, TabularMdp};

/// Diagnostics of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub iteration: usize,
    /// `max_s |V_k(s) - V_{k-1}(s)|` with `V = max_a q_hat`.
    pub bellman_error_max: f64,
    pub bellman_error_mean: f64,
    /// Variance of `q_hat` over repeated readouts, averaged over pairs; NaN
    /// when repeats are disabled.
    pub q_variance: f64,
    pub queries_iteration: u64,
    pub queries_cumulative: u64,
    pub range_scale: f64,
    /// Greedy actions after this iteration.
    pub policy: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QPolicyRun {
    pub records: Vec<IterationRecord>,
    pub final_policy: Policy,
    pub q: QTable,
    /// Whether the convergence check fired before `max_iterations`.
    pub converged: bool,
}

fn combine(readout: &BellmanReadout, baseline: &BaselineTable, config: &QPolicyConfig) -> Result<QTable> {
    match config.lambda_mode {
        LambdaMode::AutoLambda => Ok(readout.corrected()),
        LambdaMode::FixedBeta => variance_reduce(&readout.q_tilde, baseline, config.beta),
    }
}

/// Mean over pairs of the per-pair sample variance across `tables`.
fn mean_pair_variance(tables: &[QTable]) -> f64 {
    let n = tables.len();
    if n < 2 {
        return f64::NAN;
    }
    let len = tables[0].as_slice().len();
    let mut total = 0.0;
    for i in 0..len {
        let mean = tables.iter().map(|t| t.as_slice()[i]).sum::<f64>() / n as f64;
        let ss: f64 = tables.iter().map(|t| (t.as_slice()[i] - mean).powi(2)).sum();
        total += ss / (n - 1) as f64;
    }
    total / len as f64
}

fn greedy(policy: &Policy) -> Vec<usize> {
    policy.actions().map(<[usize]>::to_vec).unwrap_or_default()
}

/// Runs Q-Policy iteration from `q = 0` with a zero baseline.
///
/// Each iteration encodes the current table, reads `T_pi q` through the
/// estimator, applies the control variate, updates the EMA baseline and
/// improves the policy greedily. The loop stops early once
/// `max |q_hat - q| < convergence_tol`.
pub fn run_qpolicy(mdp: &TabularMdp, config: &QPolicyConfig) -> Result<QPolicyRun> {
    config.validate()?;
    let mdp = config.apply_gamma(mdp)?;
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let index_map = IndexMap::new(ns, na);

    let mut q = QTable::zeros(ns, na);
    let mut baseline = BaselineTable::zeros(ns, na);
    let mut policy = policy_improve(&q);
    let mut records = Vec::new();
    let mut cumulative = 0u64;
    let mut converged = false;

    for k in 1..=config.max_iterations {
        let q_in = encode_qtable(&q, &index_map)?.decode();
        let readout = bellman_readout(&mdp, &q_in, &policy, config, Some(&baseline), k as u64, 0)?;
        let q_hat = combine(&readout, &baseline, config)?;

        let q_variance = if config.q_variance_repeats >= 2 {
            let mut repeats = Vec::with_capacity(config.q_variance_repeats);
            for r in 1..=config.q_variance_repeats {
                let rep = bellman_readout(&mdp, &q_in, &policy, config, Some(&baseline), k as u64, r as u64)?;
                repeats.push(combine(&rep, &baseline, config)?);
            }
            mean_pair_variance(&repeats)
        } else {
            f64::NAN
        };

        let (err_max, err_mean) = compute_bellman_error(&q.greedy_values(), &q_hat.greedy_values())?;
        cumulative += readout.queries;
        baseline = update_baseline(&baseline, &q_hat, config.eta)?;
        policy = policy_improve(&q_hat);
        converged = q_hat.max_abs_diff(&q) < config.convergence_tol;
        q = q_hat;
        records.push(IterationRecord {
            iteration: k,
            bellman_error_max: err_max,
            bellman_error_mean: err_mean,
            q_variance,
            queries_iteration: readout.queries,
            queries_cumulative: cumulative,
            range_scale: readout.range_scale,
            policy: greedy(&policy),
        });
        if converged {
            break;
        }
    }

    Ok(QPolicyRun {
        records,
        final_policy: policy,
        q,
        converged,
    })
}
