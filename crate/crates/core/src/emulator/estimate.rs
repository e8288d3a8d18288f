//! Amplitude-estimation emulation and its query accounting.
//!
//! Two regimes are supported. `AeOracle` returns the amplitude plus an error
//! drawn uniformly from `[-epsilon, epsilon]` and charges `ceil(c_ae / epsilon)`
//! queries. `ShotSampling` returns the mean of `shots` Bernoulli outcomes and
//! charges one query per shot.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::NoiseModel;
use crate::error::{invalid_arg, Result};
use crate::rng::{seeded, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    #[default]
    ShotSampling,
    AeOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub mode: EstimatorMode,
    pub shots: u64,
    pub epsilon: f64,
    pub c_ae: f64,
    pub noise: NoiseModel,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            mode: EstimatorMode::ShotSampling,
            shots: 512,
            epsilon: 0.01,
            c_ae: 1.0,
            noise: NoiseModel::noiseless(),
            seed: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn ae_oracle(epsilon: f64, c_ae: f64) -> Self {
        Self {
            mode: EstimatorMode::AeOracle,
            epsilon,
            c_ae,
            ..Self::default()
        }
    }

    pub fn shot_sampling(shots: u64) -> Self {
        Self {
            mode: EstimatorMode::ShotSampling,
            shots,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        match self.mode {
            EstimatorMode::AeOracle => {
                if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
                    return Err(invalid_arg(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
                }
                if !(self.c_ae > 0.0 && self.c_ae.is_finite()) {
                    return Err(invalid_arg(format!("c_ae must be positive, got {}", self.c_ae)));
                }
            }
            EstimatorMode::ShotSampling => {
                if self.shots == 0 {
                    return Err(invalid_arg("shots must be at least 1"));
                }
            }
        }
        Ok(())
    }

    /// Queries charged for one readout.
    pub fn queries_per_readout(&self) -> u64 {
        match self.mode {
            EstimatorMode::AeOracle => ae_query_cost(self.c_ae, self.epsilon),
            EstimatorMode::ShotSampling => self.shots,
        }
    }
}

/// `ceil(c_ae / epsilon)`, ignoring the last-ulp residue of the division so
/// that e.g. `0.04 / 0.01` costs 4 rather than 5.
pub fn ae_query_cost(c_ae: f64, epsilon: f64) -> u64 {
    let ratio = c_ae / epsilon;
    (ratio * (1.0 - 4.0 * f64::EPSILON)).ceil().max(1.0) as u64
}

/// Outcome probability after one depolarizing application on the readout qubit.
pub(crate) fn depolarized(p: f64, noise: &NoiseModel) -> f64 {
    let flip = noise.flip_probability();
    p * (1.0 - flip) + (1.0 - p) * flip
}

/// One emulated readout of the amplitude `true_value`, using `rng`.
pub(crate) fn estimate_with(true_value: f64, config: &EstimatorConfig, rng: &mut ChaCha8Rng) -> (f64, u64) {
    let p = depolarized(true_value, &config.noise);
    match config.mode {
        EstimatorMode::AeOracle => {
            let u: f64 = rng.random_range(-1.0..=1.0);
            (p + u * config.epsilon, ae_query_cost(config.c_ae, config.epsilon))
        }
        EstimatorMode::ShotSampling => {
            let ones = binomial(config.shots, p, rng);
            (ones as f64 / config.shots as f64, config.shots)
        }
    }
}

pub(crate) fn binomial(n: u64, p: f64, rng: &mut ChaCha8Rng) -> u64 {
    let p = p.clamp(0.0, 1.0);
    if n == 0 || p == 0.0 {
        return 0;
    }
    if p == 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial parameters").sample(rng)
}

/// Estimates `true_value` in `[0, 1]`; returns the estimate and the queries spent.
pub fn amplitude_estimate(true_value: f64, config: &EstimatorConfig) -> Result<(f64, u64)> {
    if !(0.0..=1.0).contains(&true_value) {
        return Err(invalid_arg(format!("true value {true_value} not in [0, 1]")));
    }
    config.validate()?;
    let mut rng = seeded(config.seed, Domain::Estimate);
    Ok(estimate_with(true_value, config, &mut rng))
}

/// Joint outcome counts of shots measured alongside a classical control
/// variate that shares each shot's uniform draw.
///
/// For shot `j` with uniform `u_j`, the quantum outcome is `[u_j < p]`
/// (possibly flipped by readout noise) and the control outcome is
/// `[u_j < p_cv]`, whose mean `p_cv` is known exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairedCounts {
    pub both: u64,
    pub quantum_only: u64,
    pub control_only: u64,
    pub neither: u64,
}

impl PairedCounts {
    pub fn shots(&self) -> u64 {
        self.both + self.quantum_only + self.control_only + self.neither
    }

    pub fn quantum_mean(&self) -> f64 {
        (self.both + self.quantum_only) as f64 / self.shots() as f64
    }

    pub fn control_mean(&self) -> f64 {
        (self.both + self.control_only) as f64 / self.shots() as f64
    }

    /// `-Cov(x, c) / Var(c)` from the counts, or `None` when the control
    /// samples are constant.
    pub fn lambda(&self) -> Option<f64> {
        let n = self.shots() as f64;
        if n < 2.0 {
            return None;
        }
        let (mx, mc) = (self.quantum_mean(), self.control_mean());
        let exy = self.both as f64 / n;
        // sample (n-1) normalisation cancels in the ratio
        let cov = exy - mx * mc;
        let var = mc - mc * mc;
        if var <= 0.0 {
            return None;
        }
        Some(-cov / var)
    }

    /// Expands the counts into per-shot 0/1 sample vectors.
    pub fn samples(&self) -> (Vec<f64>, Vec<f64>) {
        let mut x = Vec::with_capacity(self.shots() as usize);
        let mut c = Vec::with_capacity(self.shots() as usize);
        for (count, xv, cv) in [
            (self.both, 1.0, 1.0),
            (self.quantum_only, 1.0, 0.0),
            (self.control_only, 0.0, 1.0),
            (self.neither, 0.0, 0.0),
        ] {
            for _ in 0..count {
                x.push(xv);
                c.push(cv);
            }
        }
        (x, c)
    }
}

/// Samples [`PairedCounts`] for `shots` shots in one multinomial draw.
pub(crate) fn paired_shot_readout(
    p: f64,
    p_cv: f64,
    shots: u64,
    noise: &NoiseModel,
    rng: &mut ChaCha8Rng,
) -> PairedCounts {
    let (p, p_cv) = (p.clamp(0.0, 1.0), p_cv.clamp(0.0, 1.0));
    // noiseless joint cells of ([u < p], [u < p_cv])
    let both = p.min(p_cv);
    let q_only = (p - p_cv).max(0.0);
    let c_only = (p_cv - p).max(0.0);
    let neither = (1.0 - p.max(p_cv)).max(0.0);
    // an independent outcome flip moves mass between the quantum-1 and quantum-0 cells
    let f = noise.flip_probability();
    let cells = [
        (1.0 - f) * both + f * c_only,
        (1.0 - f) * q_only + f * neither,
        (1.0 - f) * c_only + f * both,
        (1.0 - f) * neither + f * q_only,
    ];
    let mut counts = [0u64; 4];
    let mut remaining = shots;
    let mut mass = 1.0;
    for k in 0..3 {
        if remaining == 0 {
            break;
        }
        let cond = if mass > 0.0 { cells[k] / mass } else { 0.0 };
        counts[k] = binomial(remaining, cond, rng);
        remaining -= counts[k];
        mass -= cells[k];
    }
    counts[3] = remaining;
    PairedCounts {
        both: counts[0],
        quantum_only: counts[1],
        control_only: counts[2],
        neither: counts[3],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn ae_oracle_respects_the_bound() {
        for seed in 0..2000 {
            let cfg = EstimatorConfig {
                seed,
                ..EstimatorConfig::ae_oracle(0.05, 1.0)
            };
            let truth = (seed % 101) as f64 / 100.0;
            let (est, q) = amplitude_estimate(truth, &cfg).unwrap();
            assert!((est - truth).abs() <= 0.05);
            assert_eq!(q, 20);
        }
    }

    #[test]
    fn query_cost_formula() {
        assert_eq!(ae_query_cost(1.0, 0.01), 100);
        assert_eq!(ae_query_cost(0.04, 0.01), 4);
        assert_eq!(ae_query_cost(1.0, 0.03), 34);
        assert_eq!(ae_query_cost(1.0, 0.05), 2 * ae_query_cost(1.0, 0.1));
    }

    #[test]
    fn estimator_errors() {
        assert!(amplitude_estimate(0.5, &EstimatorConfig::ae_oracle(0.0, 1.0)).is_err());
        assert!(amplitude_estimate(0.5, &EstimatorConfig::shot_sampling(0)).is_err());
        assert!(amplitude_estimate(1.5, &EstimatorConfig::shot_sampling(10)).is_err());
    }

    #[test]
    fn shot_estimates_are_reproducible() {
        let cfg = EstimatorConfig {
            seed: 3,
            ..EstimatorConfig::shot_sampling(512)
        };
        assert_eq!(amplitude_estimate(0.3, &cfg).unwrap(), amplitude_estimate(0.3, &cfg).unwrap());
        assert_eq!(amplitude_estimate(0.3, &cfg).unwrap().1, 512);
    }

    #[test]
    fn paired_counts_have_the_right_marginals() {
        let noise = NoiseModel::depolarizing(0.3).unwrap();
        let mut rng = stream_rng(1, Domain::Synthetic, 0, 0, 0);
        let c = paired_shot_readout(0.3, 0.4, 2_000_000, &noise, &mut rng);
        assert_eq!(c.shots(), 2_000_000);
        assert!((c.quantum_mean() - depolarized(0.3, &noise)).abs() < 2e-3);
        assert!((c.control_mean() - 0.4).abs() < 2e-3);
    }

    #[test]
    fn identical_probabilities_give_unit_lambda() {
        let mut rng = stream_rng(2, Domain::Synthetic, 0, 0, 0);
        let c = paired_shot_readout(0.37, 0.37, 512, &NoiseModel::noiseless(), &mut rng);
        assert_eq!(c.quantum_only + c.control_only, 0);
        assert!((c.lambda().unwrap() + 1.0).abs() < 1e-12);
        let constant = PairedCounts { both: 0, quantum_only: 3, control_only: 0, neither: 5 };
        assert_eq!(constant.lambda(), None);
    }
}
