//! Counter-based random streams.
//!
//! Every stochastic draw in the crate comes from a ChaCha8 generator whose key
//! is built from `(seed, domain, a, b)` and whose stream id selects a
//! sub-sequence, typically the flattened `(s, a)` index. Two draws with the same
//! key and stream are identical no matter which thread performs them or in
//! what order they are requested.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named sub-domains so unrelated consumers of a run seed never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Readout = 1,
    Depolarizing = 2,
    Measurement = 3,
    Estimate = 4,
    MonteCarlo = 5,
    Perturbation = 6,
    Synthetic = 7,
}

pub fn stream_rng(seed: u64, domain: Domain, a: u64, b: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..].copy_from_slice(&b.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Shorthand for a single-stream generator.
pub fn seeded(seed: u64, domain: Domain) -> ChaCha8Rng {
    stream_rng(seed, domain, 0, 0, 0)
}
