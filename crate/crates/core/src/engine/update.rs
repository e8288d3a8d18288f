use rayon::prelude::*;

use super::config::{LambdaMode, QPolicyConfig};
use super::variance::BaselineTable;
use crate::emulator::{estimate_with, paired_shot_readout, EstimatorMode};
use crate::error::Result;
use crate::mdp::{bellman_backup, Policy, QTable, TabularMdp};
use crate::rng::{stream_rng, Domain};

/// One emulated Bellman evaluation and its readout.
#[derive(Debug, Clone, PartialEq)]
pub struct BellmanReadout {
    /// Read-out targets, back on the value scale.
    pub q_tilde: QTable,
    /// The exact targets `T_pi q`.
    pub targets: QTable,
    pub queries: u64,
    /// Minimum target; readouts are taken of `(t - lo) / range_scale`.
    pub lo: f64,
    pub range_scale: f64,
    /// Paired control-variate term `lambda * range_scale * (c_hat - p_cv)` per
    /// pair; zero where no paired samples exist.
    pub correction: QTable,
    /// Pairs read classically because their row is degenerate.
    pub skipped_pairs: usize,
}

impl BellmanReadout {
    /// `q_tilde + correction`.
    pub fn corrected(&self) -> QTable {
        let mut out = self.q_tilde.clone();
        for (v, c) in out.as_mut_slice().iter_mut().zip(self.correction.as_slice()) {
            *v += c;
        }
        out
    }
}

fn row_is_degenerate(row: &[f64]) -> bool {
    row.iter().all(|&v| v == row[0])
}

/// Emulates `U_Bellman` by computing `T_pi q` from the model and reads every
/// entry through the configured estimator.
///
/// `iteration` and `repeat` select the noise streams, so repeated calls with
/// the same arguments return identical readouts. When `baseline` is given and
/// shot sampling is used, each readout is paired with the baseline control.
/// The model's own discount is used; `config.gamma` is applied by callers.
pub fn bellman_readout(
    mdp: &TabularMdp,
    q: &QTable,
    policy: &Policy,
    config: &QPolicyConfig,
    baseline: Option<&BaselineTable>,
    iteration: u64,
    repeat: u64,
) -> Result<BellmanReadout> {
    config.validate()?;
    let targets = bellman_backup(mdp, q, policy)?;
    if let Some(b) = baseline {
        targets.same_shape(&b.f)?;
    }
    let (ns, na) = targets.shape();
    let lo = targets.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = targets.as_slice().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;

    let skip: Vec<bool> = (0..ns)
        .map(|s| range == 0.0 || (config.skip_degenerate_rows && row_is_degenerate(targets.row(s))))
        .collect();
    let est = &config.estimator;
    let paired = est.mode == EstimatorMode::ShotSampling;
    let use_control = paired && config.lambda_mode == LambdaMode::AutoLambda && baseline.is_some();

    let results: Vec<(f64, f64, u64)> = (0..ns * na)
        .into_par_iter()
        .map(|idx| {
            let t = targets.as_slice()[idx];
            if skip[idx / na] {
                return (t, 0.0, 0);
            }
            let p = ((t - lo) / range).clamp(0.0, 1.0);
            let mut rng = stream_rng(config.seed, Domain::Readout, iteration, repeat, idx as u64);
            if paired {
                let p_cv = baseline
                    .map(|b| ((b.f.as_slice()[idx] - lo) / range).clamp(0.0, 1.0))
                    .unwrap_or(0.0);
                let counts = paired_shot_readout(p, p_cv, est.shots, &est.noise, &mut rng);
                let correction = if use_control {
                    counts
                        .lambda()
                        .map(|l| l * range * (counts.control_mean() - p_cv))
                        .unwrap_or(0.0)
                } else {
                    0.0
                };
                (lo + range * counts.quantum_mean(), correction, est.shots)
            } else {
                let (p_hat, queries) = estimate_with(p, est, &mut rng);
                (lo + range * p_hat, 0.0, queries)
            }
        })
        .collect();

    let mut q_tilde = Vec::with_capacity(ns * na);
    let mut correction = Vec::with_capacity(ns * na);
    let mut queries = 0;
    for (v, c, k) in results {
        q_tilde.push(v);
        correction.push(c);
        queries += k;
    }
    Ok(BellmanReadout {
        q_tilde: QTable::from_vec(ns, na, q_tilde)?,
        targets,
        queries,
        lo,
        range_scale: range,
        correction: QTable::from_vec(ns, na, correction)?,
        skipped_pairs: skip.iter().filter(|&&s| s).count() * na,
    })
}

/// Reads `T_pi q` once under `config.estimator`, without a control variate.
pub fn quantum_bellman_update(
    mdp: &TabularMdp,
    q: &QTable,
    policy: &Policy,
    config: &QPolicyConfig,
) -> Result<(QTable, u64)> {
    let mdp = config.apply_gamma(mdp)?;
    let r = bellman_readout(&mdp, q, policy, config, None, 0, 0)?;
    Ok((r.q_tilde, r.queries))
}
