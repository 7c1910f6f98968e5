//! Seeded random streams.
//!
//! Every random draw in the crate goes through ChaCha8, a counter-based
//! generator. Independent streams are addressed by `(seed, stream id)`, so a
//! replicate's draws do not depend on how replicates are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for stream 0 of `seed`.
pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for an arbitrary stream of `seed`.
pub fn stream(seed: u64, id: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Purpose tags for the per-replicate streams used by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Graph = 0,
    PatientZero = 1,
    Observation = 2,
    Mask = 3,
    CrossValidation = 4,
}

/// 64-bit sub-seed for `(replicate, purpose)` derived from the stream of `seed`.
pub fn derive_seed(seed: u64, replicate: u64, purpose: Purpose) -> u64 {
    use rand::RngCore;
    stream(seed, replicate.wrapping_mul(16).wrapping_add(purpose as u64 + 1)).next_u64()
}
