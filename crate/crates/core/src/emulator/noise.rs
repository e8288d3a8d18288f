use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Pauli, StateVector};
use crate::error::{invalid_arg, Result};
use crate::rng::{seeded, Domain};

/// Single-qubit depolarizing channel `(1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z)`,
/// applied once per qubit per prepare-and-measure cycle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub depolarizing_p: f64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn depolarizing(p: f64) -> Result<Self> {
        let model = Self { depolarizing_p: p };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.depolarizing_p) {
            return Err(invalid_arg(format!(
                "depolarizing probability {} not in [0, 1]",
                self.depolarizing_p
            )));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.depolarizing_p == 0.0
    }

    /// Probability that one application flips a computational-basis outcome
    /// (the X and Y branches).
    pub fn flip_probability(&self) -> f64 {
        2.0 * self.depolarizing_p / 3.0
    }

    /// Draws the Pauli applied in one trajectory: identity with `1 - p`,
    /// each of X, Y, Z with `p / 3`.
    pub fn sample_pauli<R: Rng + ?Sized>(&self, rng: &mut R) -> Pauli {
        let u: f64 = rng.random();
        let p = self.depolarizing_p;
        if u >= p {
            Pauli::I
        } else if u < p / 3.0 {
            Pauli::X
        } else if u < 2.0 * p / 3.0 {
            Pauli::Y
        } else {
            Pauli::Z
        }
    }
}

/// One stochastic trajectory of the depolarizing channel on `qubit`.
pub fn apply_depolarizing(state: &StateVector, p: f64, qubit: usize, seed: u64) -> Result<StateVector> {
    let noise = NoiseModel::depolarizing(p)?;
    state.check_qubit(qubit)?;
    let mut out = state.clone();
    if noise.is_noiseless() {
        return Ok(out);
    }
    let pauli = noise.sample_pauli(&mut seeded(seed, Domain::Depolarizing));
    out.apply_pauli(qubit, pauli)?;
    Ok(out)
}
