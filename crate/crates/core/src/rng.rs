//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream derived from a
//! seed and a fixed purpose id, so adding a draw in one place never shifts
//! the numbers seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const VALIDATION: u64 = 1;
pub const TRAIN: u64 = 2;
pub const INIT: u64 = 3;
pub const EVAL_SUBSET: u64 = 4;
pub const EVAL_VAL_SUBSET: u64 = 5;
/// Epoch `e` shuffles with stream `SHUFFLE_BASE + e`.
pub const SHUFFLE_BASE: u64 = 1 << 32;

pub fn stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}
