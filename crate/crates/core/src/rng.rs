//! Deterministic random streams.
//!
//! A stream is identified by a 64-bit seed and a label; the label selects an
//! independent ChaCha stream so that, for example, OOD initialisation and the
//! router's train/holdout split never share draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64, stream: &str) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a64(stream.as_bytes()));
    rng
}

/// 64-bit FNV-1a. Stable across platforms and compiler versions, unlike
/// `std::hash::DefaultHasher`.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(PRIME))
}
