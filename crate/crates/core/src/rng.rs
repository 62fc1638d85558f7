//! Seedable, splittable random streams.
//!
//! Parallel work never shares a generator: a batch draws one base seed from
//! the caller's generator and item `i` of the batch runs on ChaCha stream `i`
//! of that base. Results therefore depend only on the seed and item order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `ordinal` derived from `base`.
pub fn stream(base: u64, ordinal: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(ordinal);
    rng
}

/// Draws the base seed for a batch of streamed work.
pub fn split_base<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    rng.gen()
}
