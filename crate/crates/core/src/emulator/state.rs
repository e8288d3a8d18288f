use num_complex::Complex64;

use crate::error::{invalid_arg, QPolicyError, Result};

/// Norm tolerance for a valid state.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Single-qubit Pauli operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// Whether the operator flips the computational-basis bit it acts on.
    pub fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }
}

/// Unit-norm amplitude vector over `num_qubits` qubits, little-endian indexing
/// (qubit `k` is bit `k` of the basis index).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    num_qubits: usize,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(invalid_arg(format!("state length {len} is not a power of two")));
        }
        let norm: f64 = amplitudes.iter().map(Complex64::norm_sqr).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(invalid_arg(format!("state has squared norm {norm}")));
        }
        Ok(Self {
            amplitudes,
            num_qubits: len.trailing_zeros() as usize,
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let len = 1usize << num_qubits;
        if index >= len {
            return Err(invalid_arg(format!("basis index {index} >= {len}")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); len];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            amplitudes,
            num_qubits,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    /// Born-rule outcome probabilities `|alpha_i|^2`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(Complex64::norm_sqr).collect()
    }

    pub(crate) fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(QPolicyError::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    /// Applies a Pauli gate to `qubit` in place.
    pub fn apply_pauli(&mut self, qubit: usize, pauli: Pauli) -> Result<()> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        let i = Complex64::new(0.0, 1.0);
        for lo in (0..self.amplitudes.len()).filter(|k| k & bit == 0) {
            let hi = lo | bit;
            let (a0, a1) = (self.amplitudes[lo], self.amplitudes[hi]);
            let (b0, b1) = match pauli {
                Pauli::I => (a0, a1),
                Pauli::X => (a1, a0),
                Pauli::Y => (-i * a1, i * a0),
                Pauli::Z => (a0, -a1),
            };
            self.amplitudes[lo] = b0;
            self.amplitudes[hi] = b1;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_length_and_norm() {
        assert!(StateVector::from_real(&[1.0, 0.0, 0.0]).is_err());
        assert!(StateVector::from_real(&[0.5, 0.5]).is_err());
        let s = StateVector::from_real(&[0.6, 0.0, 0.8, 0.0]).unwrap();
        assert_eq!(s.num_qubits(), 2);
    }

    #[test]
    fn paulis_act_as_expected() {
        let mut s = StateVector::basis(2, 0).unwrap();
        s.apply_pauli(1, Pauli::X).unwrap();
        assert_eq!(s.probabilities(), vec![0.0, 0.0, 1.0, 0.0]);
        s.apply_pauli(1, Pauli::Y).unwrap();
        assert_eq!(s.probabilities(), vec![1.0, 0.0, 0.0, 0.0]);
        s.apply_pauli(0, Pauli::Z).unwrap();
        assert_eq!(s.probabilities(), vec![1.0, 0.0, 0.0, 0.0]);
        assert!(s.apply_pauli(2, Pauli::X).is_err());
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }
}
