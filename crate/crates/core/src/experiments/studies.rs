use std::fmt;
use std::str::FromStr;

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::compute_bellman_error;
use super::stats::{log_log_slope, summarize, SummaryStats};
use crate::emulator::{ae_query_cost, estimate_with, EstimatorConfig, EstimatorMode, NoiseModel};
use crate::engine::{run_qpolicy, IterationRecord, LambdaMode, QPolicyConfig};
use crate::error::{invalid_arg, QPolicyError, Result};
use crate::mdp::{mc_evaluate, policy_improve, QTable, TabularMdp, DEFAULT_HORIZON};
use crate::rng::{stream_rng, Domain};

/// Records of one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedRun {
    pub seed: u64,
    pub records: Vec<IterationRecord>,
}

impl SeedRun {
    pub fn final_bellman_error(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.bellman_error_max)
    }

    pub fn total_queries(&self) -> u64 {
        self.records.last().map_or(0, |r| r.queries_cumulative)
    }

    pub fn mean_q_variance(&self) -> f64 {
        let v: Vec<f64> = self.records.iter().map(|r| r.q_variance).collect();
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// `bellman_error_max` per iteration, padded to `len` with the last value
    /// when the run stopped early.
    pub fn error_series(&self, len: usize) -> Vec<f64> {
        let mut out: Vec<f64> = self.records.iter().map(|r| r.bellman_error_max).collect();
        let last = out.last().copied().unwrap_or(f64::NAN);
        out.resize(len.max(out.len()), last);
        out
    }
}

fn run_seeds(mdp: &TabularMdp, config: &QPolicyConfig, seeds: &[u64]) -> Result<Vec<SeedRun>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = QPolicyConfig { seed, ..config.clone() };
            Ok(SeedRun {
                seed,
                records: run_qpolicy(mdp, &cfg)?.records,
            })
        })
        .collect()
}

/// Per-iteration summary across seeds, `None` with fewer than two seeds.
fn summarize_runs(runs: &[SeedRun], len: usize) -> Option<Vec<SummaryStats>> {
    let series: Vec<Vec<f64>> = runs.iter().map(|r| r.error_series(len)).collect();
    summarize(&series).ok()
}

fn check_seeds(seeds: &[u64]) -> Result<()> {
    if seeds.is_empty() {
        return Err(invalid_arg("at least one seed is required"));
    }
    Ok(())
}

/// Policy iteration with first-visit Monte Carlo evaluation; each iteration
/// spends `budget` rollouts.
pub fn run_mc_policy_iteration(
    mdp: &TabularMdp,
    budget: usize,
    iterations: usize,
    seed: u64,
) -> Result<Vec<IterationRecord>> {
    if iterations == 0 {
        return Err(invalid_arg("iterations must be at least 1"));
    }
    let mut q = QTable::zeros(mdp.num_states(), mdp.num_actions());
    let mut policy = policy_improve(&q);
    let mut records = Vec::with_capacity(iterations);
    let mut cumulative = 0;
    for k in 1..=iterations {
        let eval = mc_evaluate(mdp, &policy, budget, DEFAULT_HORIZON, seed, k as u64)?;
        let (err_max, err_mean) = compute_bellman_error(&q.greedy_values(), &eval.q.greedy_values())?;
        cumulative += eval.queries;
        policy = policy_improve(&eval.q);
        q = eval.q;
        records.push(IterationRecord {
            iteration: k,
            bellman_error_max: err_max,
            bellman_error_mean: err_mean,
            q_variance: f64::NAN,
            queries_iteration: eval.queries,
            queries_cumulative: cumulative,
            range_scale: f64::NAN,
            policy: policy.actions().map(<[usize]>::to_vec).unwrap_or_default(),
        });
    }
    Ok(records)
}

/// One method of the query comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodArm {
    pub method: String,
    pub runs: Vec<SeedRun>,
}

impl MethodArm {
    /// Mean over seeds of total queries divided by iterations run.
    pub fn queries_per_iteration(&self) -> f64 {
        let per: Vec<f64> = self
            .runs
            .iter()
            .map(|r| r.total_queries() as f64 / r.records.len() as f64)
            .collect();
        per.iter().sum::<f64>() / per.len() as f64
    }

    pub fn total_queries(&self) -> f64 {
        self.runs.iter().map(|r| r.total_queries() as f64).sum::<f64>() / self.runs.len() as f64
    }

    pub fn mean_final_error(&self) -> f64 {
        self.runs.iter().map(SeedRun::final_bellman_error).sum::<f64>() / self.runs.len() as f64
    }

    pub fn final_error_summary(&self) -> Option<SummaryStats> {
        let finals: Vec<f64> = self.runs.iter().map(SeedRun::final_bellman_error).collect();
        SummaryStats::from_samples(&finals).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryComparison {
    pub iterations: usize,
    pub quantum: MethodArm,
    pub monte_carlo: MethodArm,
}

/// Q-Policy against Monte Carlo policy iteration for the same number of
/// iterations. The Q-Policy arm runs with `max_iterations = iterations`.
pub fn run_query_complexity_study(
    mdp: &TabularMdp,
    qp_config: &QPolicyConfig,
    mc_budget: usize,
    iterations: usize,
    seeds: &[u64],
) -> Result<QueryComparison> {
    if iterations == 0 || mc_budget == 0 {
        return Err(invalid_arg("iterations and mc_budget must be at least 1"));
    }
    check_seeds(seeds)?;
    let cfg = QPolicyConfig {
        max_iterations: iterations,
        ..qp_config.clone()
    };
    let quantum = run_seeds(mdp, &cfg, seeds)?;
    let monte_carlo = seeds
        .par_iter()
        .map(|&seed| {
            Ok(SeedRun {
                seed,
                records: run_mc_policy_iteration(mdp, mc_budget, iterations, seed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QueryComparison {
        iterations,
        quantum: MethodArm {
            method: "q_policy".into(),
            runs: quantum,
        },
        monte_carlo: MethodArm {
            method: "monte_carlo".into(),
            runs: monte_carlo,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub epsilon: f64,
    pub ae_queries: u64,
    pub ae_rmse: f64,
    /// Smallest doubled sample budget whose RMSE is at most `ae_rmse`.
    pub mc_queries: u64,
    pub mc_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingStudy {
    pub points: Vec<ScalingPoint>,
    pub ae_slope: f64,
    pub mc_slope: f64,
}

const MAX_MC_BUDGET: u64 = 1 << 40;

/// Matched-accuracy comparison for estimating a single amplitude `p`.
///
/// For each precision the AE-oracle RMSE is measured over `trials` readouts;
/// the classical sample budget is then doubled from 1 until the empirical RMSE
/// of the sample mean is no larger.
pub fn run_scaling_study(epsilons: &[f64], c_ae: f64, p: f64, trials: usize, seed: u64) -> Result<ScalingStudy> {
    if epsilons.len() < 2 || trials < 2 {
        return Err(invalid_arg("need at least two precisions and two trials"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid_arg(format!("amplitude {p} not in [0, 1]")));
    }
    let rmse = |errors: Vec<f64>| (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt();
    let mut points = Vec::with_capacity(epsilons.len());
    for (i, &eps) in epsilons.iter().enumerate() {
        let cfg = EstimatorConfig::ae_oracle(eps, c_ae);
        cfg.validate()?;
        let ae_rmse = rmse(
            (0..trials)
                .map(|t| {
                    let mut rng = stream_rng(seed, Domain::Estimate, i as u64, t as u64, 0);
                    estimate_with(p, &cfg, &mut rng).0 - p
                })
                .collect(),
        );
        let mut n = 1u64;
        let mc_rmse = loop {
            let dist = Binomial::new(n, p).map_err(|e| invalid_arg(e.to_string()))?;
            let r = rmse(
                (0..trials)
                    .map(|t| {
                        let mut rng = stream_rng(seed, Domain::MonteCarlo, i as u64, t as u64, n);
                        dist.sample(&mut rng) as f64 / n as f64 - p
                    })
                    .collect(),
            );
            if r <= ae_rmse || n >= MAX_MC_BUDGET {
                break r;
            }
            n *= 2;
        };
        points.push(ScalingPoint {
            epsilon: eps,
            ae_queries: ae_query_cost(c_ae, eps),
            ae_rmse,
            mc_queries: n,
            mc_rmse,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.epsilon).collect();
    let ae: Vec<f64> = points.iter().map(|p| p.ae_queries as f64).collect();
    let mc: Vec<f64> = points.iter().map(|p| p.mc_queries as f64).collect();
    Ok(ScalingStudy {
        ae_slope: log_log_slope(&xs, &ae)?,
        mc_slope: log_log_slope(&xs, &mc)?,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationGrid {
    pub epsilons: Vec<f64>,
    pub shot_counts: Vec<u64>,
    pub seeds: Vec<u64>,
    pub iterations: usize,
}

impl AblationGrid {
    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() || self.shot_counts.is_empty() || self.seeds.is_empty() {
            return Err(invalid_arg("ablation grid lists must be nonempty"));
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(invalid_arg("ablation epsilons must lie in (0, 1)"));
        }
        if self.shot_counts.contains(&0) {
            return Err(invalid_arg("ablation shot counts must be positive"));
        }
        if self.iterations == 0 {
            return Err(invalid_arg("iterations must be at least 1"));
        }
        Ok(())
    }

    pub fn num_runs(&self) -> usize {
        self.epsilons.len() * self.shot_counts.len() * self.seeds.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationCell {
    pub epsilon: f64,
    pub shots: u64,
    pub runs: Vec<SeedRun>,
    /// Per-iteration summary of `bellman_error_max`; `None` for a single seed.
    pub summary: Option<Vec<SummaryStats>>,
}

impl AblationCell {
    pub fn mean_final_error(&self) -> f64 {
        self.runs.iter().map(SeedRun::final_bellman_error).sum::<f64>() / self.runs.len() as f64
    }
}

/// Cartesian sweep over `epsilon x shots`, each cell run for every seed.
///
/// Each cell sets `estimator.epsilon` and `estimator.shots`; which of the two
/// affects the readout depends on `base_config.estimator.mode`.
pub fn run_ablation(mdp: &TabularMdp, grid: &AblationGrid, base_config: &QPolicyConfig) -> Result<Vec<AblationCell>> {
    grid.validate()?;
    let cells: Vec<(f64, u64)> = grid
        .epsilons
        .iter()
        .flat_map(|&e| grid.shot_counts.iter().map(move |&s| (e, s)))
        .collect();
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| grid.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let runs: Vec<SeedRun> = jobs
        .par_iter()
        .map(|&(c, seed)| {
            let (epsilon, shots) = cells[c];
            let cfg = QPolicyConfig {
                estimator: EstimatorConfig {
                    epsilon,
                    shots,
                    ..base_config.estimator
                },
                max_iterations: grid.iterations,
                seed,
                ..base_config.clone()
            };
            Ok(SeedRun {
                seed,
                records: run_qpolicy(mdp, &cfg)?.records,
            })
        })
        .collect::<Result<_>>()?;
    let mut runs = runs.into_iter();
    Ok(cells
        .into_iter()
        .map(|(epsilon, shots)| {
            let cell_runs: Vec<SeedRun> = runs.by_ref().take(grid.seeds.len()).collect();
            AblationCell {
                epsilon,
                shots,
                summary: summarize_runs(&cell_runs, grid.iterations),
                runs: cell_runs,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseArm {
    pub p: f64,
    pub runs: Vec<SeedRun>,
    pub summary: Option<Vec<SummaryStats>>,
}

impl NoiseArm {
    pub fn mean_final_error(&self) -> f64 {
        self.runs.iter().map(SeedRun::final_bellman_error).sum::<f64>() / self.runs.len() as f64
    }
}

/// Runs the same seeds at each depolarizing strength.
pub fn run_noise_comparison(
    mdp: &TabularMdp,
    p_values: &[f64],
    config: &QPolicyConfig,
    seeds: &[u64],
) -> Result<Vec<NoiseArm>> {
    if !p_values.contains(&0.0) {
        return Err(invalid_arg("noise strengths must include 0"));
    }
    check_seeds(seeds)?;
    p_values
        .iter()
        .map(|&p| {
            let cfg = QPolicyConfig {
                estimator: EstimatorConfig {
                    noise: NoiseModel::depolarizing(p)?,
                    ..config.estimator
                },
                ..config.clone()
            };
            let runs = run_seeds(mdp, &cfg, seeds)?;
            Ok(NoiseArm {
                p,
                summary: summarize_runs(&runs, config.max_iterations),
                runs,
            })
        })
        .collect()
}

/// Update-rule variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// The configuration as given.
    Full,
    /// Fixed-beta mode with `beta = 0`.
    NoControlVariate,
    /// `eta = 0`, so the baseline stays at zero.
    NoEma,
    /// AE-oracle readout with the base per-readout query budget ("amplified").
    AeOracleMode,
    /// Shot readout with the base per-readout query budget ("basic").
    ShotMode,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Full,
        Variant::NoControlVariate,
        Variant::NoEma,
        Variant::AeOracleMode,
        Variant::ShotMode,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoControlVariate => "no_control_variate",
            Variant::NoEma => "no_ema",
            Variant::AeOracleMode => "ae_oracle_mode",
            Variant::ShotMode => "shot_mode",
        }
    }

    /// Derives the variant's configuration from `base`.
    ///
    /// The two readout variants keep the per-readout query budget `B` of
    /// `base`: AE-oracle mode uses `epsilon = c_ae / B` and shot mode uses
    /// `B` shots.
    pub fn configure(self, base: &QPolicyConfig) -> QPolicyConfig {
        let budget = base.estimator.queries_per_readout();
        let mut cfg = base.clone();
        match self {
            Variant::Full => {}
            Variant::NoControlVariate => {
                cfg.lambda_mode = LambdaMode::FixedBeta;
                cfg.beta = 0.0;
            }
            Variant::NoEma => cfg.eta = 0.0,
            Variant::AeOracleMode => {
                cfg.estimator.mode = EstimatorMode::AeOracle;
                cfg.estimator.epsilon = cfg.estimator.c_ae / budget as f64;
            }
            Variant::ShotMode => {
                cfg.estimator.mode = EstimatorMode::ShotSampling;
                cfg.estimator.shots = budget;
            }
        }
        cfg
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = QPolicyError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Variant::Full),
            "no_control_variate" => Ok(Variant::NoControlVariate),
            "no_ema" => Ok(Variant::NoEma),
            "ae_oracle_mode" | "amplified" => Ok(Variant::AeOracleMode),
            "shot_mode" | "basic" => Ok(Variant::ShotMode),
            other => Err(QPolicyError::UnknownVariant(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantArm {
    pub variant: Variant,
    pub runs: Vec<SeedRun>,
    pub summary: Option<Vec<SummaryStats>>,
}

impl VariantArm {
    pub fn mean_final_error(&self) -> f64 {
        self.runs.iter().map(SeedRun::final_bellman_error).sum::<f64>() / self.runs.len() as f64
    }

    pub fn mean_q_variance(&self) -> f64 {
        self.runs.iter().map(SeedRun::mean_q_variance).sum::<f64>() / self.runs.len() as f64
    }
}

/// Runs each named variant on the same seeds and iteration budget.
pub fn run_update_rule_ablation<S: AsRef<str>>(
    mdp: &TabularMdp,
    config: &QPolicyConfig,
    variants: &[S],
    seeds: &[u64],
) -> Result<Vec<VariantArm>> {
    let parsed = variants
        .iter()
        .map(|v| v.as_ref().parse::<Variant>())
        .collect::<Result<Vec<_>>>()?;
    check_seeds(seeds)?;
    parsed
        .into_iter()
        .map(|variant| {
            let runs = run_seeds(mdp, &variant.configure(config), seeds)?;
            Ok(VariantArm {
                variant,
                summary: summarize_runs(&runs, config.max_iterations),
                runs,
            })
        })
        .collect()
}
