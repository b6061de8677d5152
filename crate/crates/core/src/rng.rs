//! Seeded random streams. Every random draw in the crate goes through here.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Folds = 1,
    Split = 2,
    Synth = 3,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Generator keyed by `(seed, a, b)`; used where draws must not depend on
/// iteration order, e.g. one stream per plot and variable.
pub fn keyed_rng(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_add(0x5851_F42D_4C95_7F2D));
    rng
}
