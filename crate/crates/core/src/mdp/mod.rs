//! Finite tabular MDPs, benchmark environments and exact classical solvers.

mod envs;
mod io;
mod montecarlo;
mod solve;

pub use envs::{build_frozenlake, build_gridworld, frozenlake_map, GridWorld, SlipMode};
pub use io::{load_mdp, mdp_from_json, mdp_to_json, save_mdp};
pub use montecarlo::{mc_policy_evaluation, McEvaluation, DEFAULT_HORIZON};
pub(crate) use io::format_f64;
pub(crate) use montecarlo::mc_evaluate;
pub use solve::{
    bellman_backup, exact_policy_evaluation, greedy_action, policy_improve, value_iteration,
    TIE_TOLERANCE,
};

use std::collections::BTreeSet;

use crate::error::{invalid_arg, QPolicyError, Result};

/// Row sums must be 1 within this tolerance.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;

/// A finite MDP with sparse transition rows.
///
/// Rows are stored per flattened pair `s * num_actions + a`. Terminal states
/// loop onto themselves with probability 1 and reward 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    transitions: Vec<Vec<(usize, f64)>>,
    rewards: Vec<f64>,
    gamma: f64,
    terminals: BTreeSet<usize>,
    start: usize,
    sparsity: usize,
}

impl TabularMdp {
    /// Builds and validates a model. `transitions` and `rewards` are indexed by
    /// `s * num_actions + a`; duplicate successors within a row are merged.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transitions: Vec<Vec<(usize, f64)>>,
        rewards: Vec<f64>,
        gamma: f64,
        terminals: BTreeSet<usize>,
        start: usize,
    ) -> Result<Self> {
        let bad = |msg: String| Err(QPolicyError::InvalidModel(msg));
        if num_states == 0 || num_actions == 0 {
            return bad("num_states and num_actions must be positive".into());
        }
        let pairs = num_states * num_actions;
        if transitions.len() != pairs || rewards.len() != pairs {
            return bad(format!(
                "expected {pairs} transition rows and rewards, got {} and {}",
                transitions.len(),
                rewards.len()
            ));
        }
        if !(0.0..1.0).contains(&gamma) {
            return bad(format!("gamma must lie in [0, 1), got {gamma}"));
        }
        if start >= num_states {
            return bad(format!("start state {start} out of range"));
        }
        if let Some(&t) = terminals.iter().find(|&&t| t >= num_states) {
            return bad(format!("terminal state {t} out of range"));
        }

        let mut merged_rows = Vec::with_capacity(pairs);
        for (i, row) in transitions.into_iter().enumerate() {
            let (s, a) = (i / num_actions, i % num_actions);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (next, p) in row {
                if next >= num_states {
                    return bad(format!("successor {next} of ({s}, {a}) out of range"));
                }
                if !p.is_finite() || p < 0.0 {
                    return bad(format!("invalid probability {p} in row ({s}, {a})"));
                }
                if p == 0.0 {
                    continue;
                }
                match merged.iter_mut().find(|(n, _)| *n == next) {
                    Some(entry) => entry.1 += p,
                    None => merged.push((next, p)),
                }
            }
            merged.sort_by_key(|&(n, _)| n);
            let total: f64 = merged.iter().map(|&(_, p)| p).sum();
            if (total - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
                return bad(format!("row ({s}, {a}) sums to {total}"));
            }
            if !rewards[i].is_finite() {
                return bad(format!("non-finite reward at ({s}, {a})"));
            }
            if terminals.contains(&s) && (merged != [(s, 1.0)] || rewards[i] != 0.0) {
                return bad(format!(
                    "terminal state {s} must self-loop with probability 1 and reward 0"
                ));
            }
            merged_rows.push(merged);
        }
        let sparsity = merged_rows.iter().map(Vec::len).max().unwrap_or(0);

        Ok(Self {
            num_states,
            num_actions,
            transitions: merged_rows,
            rewards,
            gamma,
            terminals,
            start,
            sparsity,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_pairs(&self) -> usize {
        self.num_states * self.num_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn terminals(&self) -> &BTreeSet<usize> {
        &self.terminals
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminals.contains(&s)
    }

    /// Maximum number of nonzero successors over all rows.
    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    pub fn successors(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.transitions[s * self.num_actions + a]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.num_actions + a]
    }

    /// Same dynamics under a different discount.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(QPolicyError::InvalidModel(format!(
                "gamma must lie in [0, 1), got {gamma}"
            )));
        }
        let mut mdp = self.clone();
        mdp.gamma = gamma;
        Ok(mdp)
    }

    pub(crate) fn check_table(&self, q: &QTable) -> Result<()> {
        if q.num_states() != self.num_states || q.num_actions() != self.num_actions {
            return Err(QPolicyError::ShapeMismatch {
                expected: (self.num_states, self.num_actions),
                actual: q.shape(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.num_states() != self.num_states || policy.num_actions() != self.num_actions {
            return Err(QPolicyError::ShapeMismatch {
                expected: (self.num_states, self.num_actions),
                actual: (policy.num_states(), policy.num_actions()),
            });
        }
        Ok(())
    }
}

/// A deterministic or stochastic policy over a fixed action count.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Deterministic {
        actions: Vec<usize>,
        num_actions: usize,
    },
    Stochastic {
        probs: Vec<Vec<f64>>,
    },
}

impl Policy {
    pub fn deterministic(actions: Vec<usize>, num_actions: usize) -> Result<Self> {
        if num_actions == 0 {
            return Err(invalid_arg("num_actions must be positive"));
        }
        if let Some(a) = actions.iter().find(|&&a| a >= num_actions) {
            return Err(invalid_arg(format!("action {a} out of range")));
        }
        Ok(Policy::Deterministic {
            actions,
            num_actions,
        })
    }

    pub fn stochastic(probs: Vec<Vec<f64>>) -> Result<Self> {
        let width = probs.first().map(Vec::len).unwrap_or(0);
        if width == 0 {
            return Err(invalid_arg("stochastic policy needs at least one action"));
        }
        for (s, row) in probs.iter().enumerate() {
            if row.len() != width {
                return Err(invalid_arg(format!("ragged policy row {s}")));
            }
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(invalid_arg(format!("negative or non-finite entry in row {s}")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
                return Err(invalid_arg(format!("policy row {s} sums to {total}")));
            }
        }
        Ok(Policy::Stochastic { probs })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Policy::Stochastic {
            probs: vec![vec![1.0 / num_actions as f64; num_actions]; num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        match self {
            Policy::Deterministic { actions, .. } => actions.len(),
            Policy::Stochastic { probs } => probs.len(),
        }
    }

    pub fn num_actions(&self) -> usize {
        match self {
            Policy::Deterministic { num_actions, .. } => *num_actions,
            Policy::Stochastic { probs } => probs.first().map(Vec::len).unwrap_or(0),
        }
    }

    /// pi(a | s)
    pub fn prob(&self, s: usize, a: usize) -> f64 {
        match self {
            Policy::Deterministic { actions, .. } => f64::from(u8::from(actions[s] == a)),
            Policy::Stochastic { probs } => probs[s][a],
        }
    }

    /// Expected action value under the policy, `sum_a pi(a|s) q(s,a)`.
    pub fn state_value(&self, q: &QTable, s: usize) -> f64 {
        match self {
            Policy::Deterministic { actions, .. } => q.get(s, actions[s]),
            Policy::Stochastic { probs } => probs[s]
                .iter()
                .zip(q.row(s))
                .map(|(p, v)| p * v)
                .sum(),
        }
    }

    pub fn values(&self, q: &QTable) -> Vec<f64> {
        (0..q.num_states()).map(|s| self.state_value(q, s)).collect()
    }

    /// Dense stochastic form; a deterministic policy yields one unit entry per row.
    pub fn to_stochastic(&self) -> Policy {
        match self {
            Policy::Stochastic { .. } => self.clone(),
            Policy::Deterministic {
                actions,
                num_actions,
            } => Policy::Stochastic {
                probs: actions
                    .iter()
                    .map(|&a| {
                        let mut row = vec![0.0; *num_actions];
                        row[a] = 1.0;
                        row
                    })
                    .collect(),
            },
        }
    }

    /// The action table of a deterministic policy.
    pub fn actions(&self) -> Option<&[usize]> {
        match self {
            Policy::Deterministic { actions, .. } => Some(actions),
            Policy::Stochastic { .. } => None,
        }
    }
}

/// Dense `num_states x num_actions` action-value table, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self::filled(num_states, num_actions, 0.0)
    }

    pub fn filled(num_states: usize, num_actions: usize, value: f64) -> Self {
        Self {
            num_states,
            num_actions,
            values: vec![value; num_states * num_actions],
        }
    }

    pub fn from_vec(num_states: usize, num_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_states * num_actions {
            return Err(invalid_arg(format!(
                "expected {} values, got {}",
                num_states * num_actions,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid_arg(format!("non-finite Q value at flat index {i}")));
        }
        Ok(Self {
            num_states,
            num_actions,
            values,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.num_states, self.num_actions)
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.num_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, value: f64) {
        self.values[s * self.num_actions + a] = value;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.num_actions..(s + 1) * self.num_actions]
    }

    /// Flattened values in `s * num_actions + a` order.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `max_a Q(s, a)` per state.
    pub fn greedy_values(&self) -> Vec<f64> {
        (0..self.num_states)
            .map(|s| self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    pub fn max_abs_diff(&self, other: &QTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn same_shape(&self, other: &QTable) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(QPolicyError::ShapeMismatch {
                expected: self.shape(),
                actual: other.shape(),
            });
        }
        Ok(())
    }
}

/// Infinity norm of the difference of two vectors of equal length.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
