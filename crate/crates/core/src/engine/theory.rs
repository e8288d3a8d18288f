//! Empirical checks of the stability and convergence guarantees.

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid_arg, Result};
use crate::mdp::{exact_policy_evaluation, policy_improve, value_iteration, Policy, QTable, TabularMdp};
use crate::rng::{stream_rng, Domain};

const EVAL_TOL: f64 = 1e-12;
/// Slack for the exact evaluations on either side of a bound.
const CHECK_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub epsilon: f64,
    pub trials: usize,
    /// `2 gamma epsilon / (1 - gamma)`.
    pub bound: f64,
    pub max_gap: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub epsilon: f64,
    pub iterations: usize,
    /// `max_s V*(s) - V^{pi_K}(s)`.
    pub gap: f64,
    /// `2 gamma epsilon / (1 - gamma)^2`.
    pub bound: f64,
    /// `2 epsilon / (1 - 3 gamma)`, only defined for `gamma < 1/3`.
    pub proof_bound: Option<f64>,
    pub holds: bool,
}

fn perturb(q: &QTable, epsilon: f64, rng: &mut impl Rng) -> QTable {
    let mut out = q.clone();
    if epsilon > 0.0 {
        for v in out.as_mut_slice() {
            *v += rng.random_range(-epsilon..=epsilon);
        }
    }
    out
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Perturbs the exact `Q^pi` by i.i.d. uniform noise bounded by `epsilon_k`,
/// improves greedily and checks `|V^{pi'} - V^pi|_inf <= 2 gamma eps / (1 - gamma)`.
pub fn verify_stability(
    mdp: &TabularMdp,
    policy: &Policy,
    epsilon_k: f64,
    trials: usize,
    seed: u64,
) -> Result<StabilityReport> {
    if !(epsilon_k >= 0.0 && epsilon_k.is_finite()) {
        return Err(invalid_arg(format!("epsilon_k must be nonnegative, got {epsilon_k}")));
    }
    let gamma = mdp.gamma();
    let q_pi = exact_policy_evaluation(mdp, policy, EVAL_TOL)?;
    let v_pi = policy.values(&q_pi);
    let bound = 2.0 * gamma * epsilon_k / (1.0 - gamma);
    let (mut max_gap, mut violations) = (0.0f64, 0);
    for trial in 0..trials {
        let mut rng = stream_rng(seed, Domain::Perturbation, 0, trial as u64, 0);
        let improved = policy_improve(&perturb(&q_pi, epsilon_k, &mut rng));
        let v_new = improved.values(&exact_policy_evaluation(mdp, &improved, EVAL_TOL)?);
        let gap = max_abs(&v_new, &v_pi);
        max_gap = max_gap.max(gap);
        if gap > bound + CHECK_SLACK {
            violations += 1;
        }
    }
    Ok(StabilityReport {
        epsilon: epsilon_k,
        trials,
        bound,
        max_gap,
        violations,
    })
}

/// `ceil(log(1/epsilon) / (1 - gamma))`.
pub fn convergence_iterations(epsilon: f64, gamma: f64) -> usize {
    ((1.0 / epsilon).ln() / (1.0 - gamma)).ceil().max(1.0) as usize
}

/// Approximate policy iteration in which every evaluation carries injected
/// error bounded by `epsilon`, compared against the optimal values.
///
/// With `epsilon = 0` this is exact policy iteration run until the policy is
/// stable.
pub fn verify_convergence_bound(mdp: &TabularMdp, epsilon: f64, seed: u64) -> Result<ConvergenceReport> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(invalid_arg(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    let gamma = mdp.gamma();
    let (q_star, _) = value_iteration(mdp, EVAL_TOL)?;
    let v_star = q_star.greedy_values();

    let mut policy = policy_improve(&QTable::zeros(mdp.num_states(), mdp.num_actions()));
    let mut iterations = 0;
    if epsilon > 0.0 {
        for k in 0..convergence_iterations(epsilon, gamma) {
            let mut rng = stream_rng(seed, Domain::Perturbation, 1, k as u64, 0);
            let q = exact_policy_evaluation(mdp, &policy, EVAL_TOL)?;
            policy = policy_improve(&perturb(&q, epsilon, &mut rng));
            iterations += 1;
        }
    } else {
        loop {
            let q = exact_policy_evaluation(mdp, &policy, EVAL_TOL)?;
            let next = policy_improve(&q);
            iterations += 1;
            if next == policy || iterations >= 10_000 {
                break;
            }
            policy = next;
        }
    }

    let v_k = policy.values(&exact_policy_evaluation(mdp, &policy, EVAL_TOL)?);
    let gap = v_star
        .iter()
        .zip(&v_k)
        .map(|(a, b)| a - b)
        .fold(0.0f64, f64::max);
    let bound = 2.0 * gamma * epsilon / ((1.0 - gamma) * (1.0 - gamma));
    let proof_bound = (gamma < 1.0 / 3.0).then(|| 2.0 * epsilon / (1.0 - 3.0 * gamma));
    Ok(ConvergenceReport {
        epsilon,
        iterations,
        gap,
        bound,
        proof_bound,
        holds: gap <= bound + CHECK_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::mdp::build_gridworld;

    fn grid() -> TabularMdp {
        build_gridworld(4, 4, 0.2, (3, 3), 0.95).unwrap()
    }

    /// Two states, two actions; action 1 in state 0 is a gamble.
    fn two_state() -> TabularMdp {
        TabularMdp::new(
            2,
            2,
            vec![
                vec![(0, 1.0)],
                vec![(0, 0.4), (1, 0.6)],
                vec![(1, 1.0)],
                vec![(0, 0.7), (1, 0.3)],
            ],
            vec![0.2, 0.1, 0.5, 0.0],
            0.5,
            BTreeSet::new(),
            0,
        )
        .unwrap()
    }

    /// Optimal values by enumerating all deterministic policies.
    fn enumerate_optimum(mdp: &TabularMdp) -> Vec<f64> {
        let (ns, na) = (mdp.num_states(), mdp.num_actions());
        let mut best = vec![f64::NEG_INFINITY; ns];
        for code in 0..na.pow(ns as u32) {
            let actions: Vec<usize> = (0..ns).map(|s| code / na.pow(s as u32) % na).collect();
            let pi = Policy::deterministic(actions, na).unwrap();
            let v = pi.values(&exact_policy_evaluation(mdp, &pi, 1e-13).unwrap());
            for s in 0..ns {
                best[s] = best[s].max(v[s]);
            }
        }
        best
    }

    #[test]
    fn stability_with_optimal_policy() {
        let mdp = grid();
        let (_, pi) = value_iteration(&mdp, 1e-12).unwrap();
        let r = verify_stability(&mdp, &pi, 0.05, 100, 1).unwrap();
        assert_eq!(r.violations, 0);
        assert!((r.bound - 1.9).abs() < 1e-12);
        let exact = verify_stability(&mdp, &pi, 0.0, 3, 1).unwrap();
        assert_eq!(exact.violations, 0);
        assert!(exact.max_gap < 1e-9);
        assert!(verify_stability(&mdp, &pi, -0.1, 1, 0).is_err());
    }

    #[test]
    fn stability_on_a_single_state() {
        let mdp = TabularMdp::new(1, 2, vec![vec![(0, 1.0)], vec![(0, 1.0)]], vec![1.0, 0.5], 0.9, BTreeSet::new(), 0)
            .unwrap();
        let pi = Policy::deterministic(vec![0], 2).unwrap();
        // V^pi = 10 and any perturbation below 0.25 keeps action 0
        let r = verify_stability(&mdp, &pi, 0.2, 20, 0).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.max_gap < 1e-9);
    }

    #[test]
    fn convergence_iteration_count() {
        assert_eq!(convergence_iterations(0.01, 0.95), 93);
        assert_eq!(convergence_iterations(0.1, 0.5), 5);
    }

    #[test]
    fn convergence_bound_on_gridworld() {
        let r = verify_convergence_bound(&grid(), 0.01, 3).unwrap();
        assert!(r.holds);
        assert!((r.bound - 7.6).abs() < 1e-9);
        assert_eq!(r.proof_bound, None);
        assert_eq!(r.iterations, 93);
        let exact = verify_convergence_bound(&grid(), 0.0, 0).unwrap();
        assert!(exact.gap < 1e-9);
    }

    #[test]
    fn convergence_bound_on_two_states() {
        let mdp = two_state();
        let v_star = enumerate_optimum(&mdp);
        let (q_vi, _) = value_iteration(&mdp, 1e-13).unwrap();
        assert!(max_abs(&v_star, &q_vi.greedy_values()) < 1e-10);
        for seed in 0..20 {
            let r = verify_convergence_bound(&mdp, 0.1, seed).unwrap();
            assert!((r.bound - 0.4).abs() < 1e-12);
            assert!(r.holds, "{r:?}");
        }
        let exact = verify_convergence_bound(&mdp, 0.0, 0).unwrap();
        assert!(exact.gap < 1e-10);
    }
}
