use super::{Policy, QTable, TabularMdp};
use crate::error::{invalid_arg, Result};

/// Action values closer than this (relative to the row maximum) count as tied.
///
/// Symmetric environments produce exactly tied optimal actions whose computed
/// values differ only by rounding or by emulated readout noise at the 1e-12
/// level; treating them as ties keeps greedy choices reproducible.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// Greedy action for one row; ties resolve to the lowest action index.
pub fn greedy_action(row: &[f64]) -> usize {
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = TIE_TOLERANCE * best.abs().max(1.0);
    row.iter().position(|&v| v >= best - slack).unwrap_or(0)
}

/// Deterministic greedy policy with lowest-index tie breaking.
pub fn policy_improve(q: &QTable) -> Policy {
    Policy::Deterministic {
        actions: (0..q.num_states()).map(|s| greedy_action(q.row(s))).collect(),
        num_actions: q.num_actions(),
    }
}

/// One synchronous application of `T_pi`:
/// `r(s,a) + gamma * sum_s' P(s'|s,a) * sum_a' pi(a'|s') q(s',a')`.
pub fn bellman_backup(mdp: &TabularMdp, q: &QTable, policy: &Policy) -> Result<QTable> {
    mdp.check_table(q)?;
    mdp.check_policy(policy)?;
    let v = policy.values(q);
    Ok(backup_with_values(mdp, &v))
}

pub(crate) fn backup_with_values(mdp: &TabularMdp, v: &[f64]) -> QTable {
    let mut out = QTable::zeros(mdp.num_states(), mdp.num_actions());
    let gamma = mdp.gamma();
    for s in 0..mdp.num_states() {
        for a in 0..mdp.num_actions() {
            let next: f64 = mdp.successors(s, a).iter().map(|&(n, p)| p * v[n]).sum();
            out.set(s, a, mdp.reward(s, a) + gamma * next);
        }
    }
    out
}

/// Stopping threshold on successive iterates that guarantees `tol` accuracy
/// for a gamma-contraction.
fn successive_threshold(tol: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        f64::INFINITY
    } else {
        tol * (1.0 - gamma) / gamma
    }
}

/// Fixed point of `T_pi` to within `tol` in the infinity norm.
pub fn exact_policy_evaluation(mdp: &TabularMdp, policy: &Policy, tol: f64) -> Result<QTable> {
    if !(tol > 0.0) {
        return Err(invalid_arg(format!("tolerance must be positive, got {tol}")));
    }
    mdp.check_policy(policy)?;
    let threshold = successive_threshold(tol, mdp.gamma());
    let mut q = QTable::zeros(mdp.num_states(), mdp.num_actions());
    loop {
        let next = backup_with_values(mdp, &policy.values(&q));
        let diff = next.max_abs_diff(&q);
        q = next;
        if diff < threshold {
            return Ok(q);
        }
    }
}

/// Optimal action values within `tol`, plus the greedy policy.
pub fn value_iteration(mdp: &TabularMdp, tol: f64) -> Result<(QTable, Policy)> {
    if !(tol > 0.0) {
        return Err(invalid_arg(format!("tolerance must be positive, got {tol}")));
    }
    let threshold = successive_threshold(tol, mdp.gamma());
    let mut q = QTable::zeros(mdp.num_states(), mdp.num_actions());
    loop {
        let next = backup_with_values(mdp, &q.greedy_values());
        let diff = next.max_abs_diff(&q);
        q = next;
        if diff < threshold {
            let policy = policy_improve(&q);
            return Ok((q, policy));
        }
    }
}
