use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{NoiseModel, StateVector};
use crate::error::{invalid_arg, QPolicyError, Result};
use crate::rng::{seeded, Domain};

/// Basis-index counts from repeated computational-basis measurement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementHistogram {
    pub counts: BTreeMap<usize, u64>,
    pub shots: u64,
    pub num_qubits: usize,
}

impl MeasurementHistogram {
    /// Builds a histogram from explicit counts; `shots` is their sum.
    pub fn from_counts(num_qubits: usize, counts: BTreeMap<usize, u64>) -> Result<Self> {
        if let Some(&i) = counts.keys().find(|&&i| i >= 1usize << num_qubits) {
            return Err(invalid_arg(format!("index {i} out of range for {num_qubits} qubits")));
        }
        let shots = counts.values().sum();
        Ok(Self {
            counts,
            shots,
            num_qubits,
        })
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    pub fn frequency(&self, index: usize) -> f64 {
        self.count(index) as f64 / self.shots as f64
    }

    /// `{"index": count}` JSON map.
    pub fn to_json(&self) -> String {
        let map: BTreeMap<String, u64> = self.counts.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        serde_json::to_string(&map).expect("histogram serializes")
    }
}

fn sample_index(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Samples `shots` basis outcomes from `|alpha_i|^2`.
///
/// With noise, each shot runs one depolarizing trajectory per qubit before
/// measurement. X and Y flip that qubit's outcome bit and Z leaves the outcome
/// statistics unchanged, so a trajectory is realised as an XOR mask on the
/// sampled index.
pub fn measure(state: &StateVector, shots: u64, noise: NoiseModel, seed: u64) -> Result<MeasurementHistogram> {
    if shots == 0 {
        return Err(invalid_arg("shots must be at least 1"));
    }
    noise.validate()?;
    let mut cdf = state.probabilities();
    let mut acc = 0.0;
    for c in cdf.iter_mut() {
        acc += *c;
        *c = acc;
    }
    let mut rng = seeded(seed, Domain::Measurement);
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let mut index = sample_index(&cdf, rng.random::<f64>() * acc);
        if !noise.is_noiseless() {
            for qubit in 0..state.num_qubits() {
                if noise.sample_pauli(&mut rng).flips() {
                    index ^= 1 << qubit;
                }
            }
        }
        *counts.entry(index).or_insert(0) += 1;
    }
    Ok(MeasurementHistogram {
        counts,
        shots,
        num_qubits: state.num_qubits(),
    })
}

/// `sum_i i * count_i / shots`.
pub fn expected_index(hist: &MeasurementHistogram) -> Result<f64> {
    if hist.shots == 0 || hist.counts.values().all(|&c| c == 0) {
        return Err(QPolicyError::EmptyHistogram);
    }
    let weighted: f64 = hist.counts.iter().map(|(&i, &c)| i as f64 * c as f64).sum();
    Ok(weighted / hist.shots as f64)
}
