use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Policy, QTable, TabularMdp};
use crate::error::{invalid_arg, Result};
use crate::rng::{stream_rng, Domain};

/// Rollout length used when none is given; `0.95^100 < 0.006`.
pub const DEFAULT_HORIZON: usize = 100;

/// First-visit Monte Carlo estimate of `Q^pi`.
#[derive(Debug, Clone)]
pub struct McEvaluation {
    pub q: QTable,
    /// First visits per pair; pairs with zero visits keep an estimate of 0.
    pub visits: Vec<u64>,
    /// One query per rollout.
    pub queries: u64,
}

fn sample_successor(row: &[(usize, f64)], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(next, p) in row {
        acc += p;
        if u < acc {
            return next;
        }
    }
    row.last().map(|&(n, _)| n).unwrap_or(0)
}

fn sample_action(policy: &Policy, s: usize, rng: &mut ChaCha8Rng) -> usize {
    match policy {
        Policy::Deterministic { actions, .. } => actions[s],
        Policy::Stochastic { probs } => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (a, &p) in probs[s].iter().enumerate() {
                acc += p;
                if u < acc {
                    return a;
                }
            }
            probs[s].len() - 1
        }
    }
}

/// Rollouts start at a uniformly drawn `(s, a)` and follow `policy` for at
/// most `horizon` steps or until a terminal state is reached. The step reward
/// is the model's expected reward `r(s, a)`.
pub fn mc_policy_evaluation(
    mdp: &TabularMdp,
    policy: &Policy,
    num_trajectories: usize,
    horizon: usize,
    seed: u64,
) -> Result<McEvaluation> {
    mc_evaluate(mdp, policy, num_trajectories, horizon, seed, 0)
}

/// As [`mc_policy_evaluation`], drawing from the stream family of `round`.
pub(crate) fn mc_evaluate(
    mdp: &TabularMdp,
    policy: &Policy,
    num_trajectories: usize,
    horizon: usize,
    seed: u64,
    round: u64,
) -> Result<McEvaluation> {
    if num_trajectories == 0 || horizon == 0 {
        return Err(invalid_arg("num_trajectories and horizon must be at least 1"));
    }
    mdp.check_policy(policy)?;
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let gamma = mdp.gamma();
    let mut rng = stream_rng(seed, Domain::MonteCarlo, round, 0, 0);

    let mut sums = vec![0.0; ns * na];
    let mut visits = vec![0u64; ns * na];
    let mut stamp = vec![usize::MAX; ns * na];
    let mut path: Vec<(usize, f64)> = Vec::with_capacity(horizon);
    let mut first: Vec<bool> = Vec::with_capacity(horizon);

    for t in 0..num_trajectories {
        path.clear();
        first.clear();
        let pair = rng.random_range(0..ns * na);
        let (mut s, mut a) = (pair / na, pair % na);
        for _ in 0..horizon {
            if mdp.is_terminal(s) {
                break;
            }
            let idx = s * na + a;
            first.push(stamp[idx] != t);
            stamp[idx] = t;
            path.push((idx, mdp.reward(s, a)));
            s = sample_successor(mdp.successors(s, a), &mut rng);
            a = sample_action(policy, s, &mut rng);
        }
        // rollouts from a terminal pair have return 0
        if path.is_empty() {
            let idx = s * na + a;
            visits[idx] += 1;
            continue;
        }
        let mut ret = 0.0;
        for (&(idx, r), &is_first) in path.iter().zip(&first).rev() {
            ret = r + gamma * ret;
            if is_first {
                sums[idx] += ret;
                visits[idx] += 1;
            }
        }
    }

    let values = sums
        .iter()
        .zip(&visits)
        .map(|(&sum, &n)| if n > 0 { sum / n as f64 } else { 0.0 })
        .collect();
    Ok(McEvaluation {
        q: QTable::from_vec(ns, na, values)?,
        visits,
        queries: num_trajectories as u64,
    })
}
