use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Example;

/// `k` pseudo-random bits keyed by `(seed, universe_index)`.
///
/// The bits are a function of the key alone, so an example keeps its
/// suffix across epochs, generation order and runs sharing the seed.
pub fn suffix_bits(seed: u64, universe_index: u128, k: usize) -> Vec<bool> {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..24].copy_from_slice(&universe_index.to_le_bytes());
    key[24..].copy_from_slice(b"suffix\0\0");
    let mut rng = ChaCha8Rng::from_seed(key);
    (0..k).map(|_| rng.random::<bool>()).collect()
}

/// Appends a `k`-bit random suffix after the target. `k = 0` leaves the
/// example unchanged.
pub fn attach_suffix(mut example: Example, k: usize, seed: u64) -> Example {
    if k > 0 {
        example.suffix = suffix_bits(seed, example.universe_index, k);
    }
    example
}
