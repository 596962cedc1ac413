//! Seed derivation for independent deterministic streams.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

use crate::math::splitmix64;

/// Derive a child RNG from a master seed and a stream index. Streams for
/// distinct indices are independent and stable across runs.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut state = master_seed ^ 0xa076_1d64_78bd_642f_u64.wrapping_mul(stream.wrapping_add(1));
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
