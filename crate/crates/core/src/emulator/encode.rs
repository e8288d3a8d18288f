use super::StateVector;
use crate::error::{invalid_arg, QPolicyError, Result};

/// A classical vector written into amplitudes, with what is needed to undo it.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeEncoding {
    pub state: StateVector,
    /// L2 norm of the input; amplitude `i` times `scale` recovers entry `i`.
    pub scale: f64,
    /// Zeros appended to reach a power-of-two length.
    pub pad_len: usize,
}

impl AmplitudeEncoding {
    /// Original (unpadded) vector.
    pub fn decode(&self) -> Vec<f64> {
        let n = self.state.len() - self.pad_len;
        self.state.amplitudes()[..n]
            .iter()
            .map(|a| a.re * self.scale)
            .collect()
    }
}

/// Pads to the next power of two and normalises; entries must be nonnegative
/// and not all zero.
pub fn amplitude_encode(values: &[f64]) -> Result<AmplitudeEncoding> {
    if values.is_empty() {
        return Err(invalid_arg("cannot encode an empty vector"));
    }
    if let Some((index, &value)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0)
    {
        return Err(QPolicyError::NegativeEntry { index, value });
    }
    let scale = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if scale == 0.0 {
        return Err(QPolicyError::ZeroNorm);
    }
    let len = values.len().next_power_of_two();
    let mut amplitudes: Vec<f64> = values.iter().map(|v| v / scale).collect();
    amplitudes.resize(len, 0.0);
    Ok(AmplitudeEncoding {
        state: StateVector::from_real(&amplitudes)?,
        scale,
        pad_len: len - values.len(),
    })
}

/// Subtracts the minimum so the smallest entry becomes zero.
pub fn shift_for_encoding(row: &[f64]) -> Result<(Vec<f64>, f64)> {
    if row.is_empty() {
        return Err(invalid_arg("cannot shift an empty vector"));
    }
    if row.iter().any(|v| !v.is_finite()) {
        return Err(invalid_arg("vector has non-finite entries"));
    }
    let offset = row.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((row.iter().map(|v| v - offset).collect(), offset))
}
