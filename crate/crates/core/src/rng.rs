//! Seeded random streams.
//!
//! Every stochastic routine draws from a ChaCha8 generator keyed by an
//! experiment seed and selected by a 64-bit stream id. ChaCha is counter
//! based, so stream `(s, r)` yields the same numbers whichever thread asks
//! for it and in whatever order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for replicate `replicate` of sweep point `sweep`.
pub fn replicate_stream(sweep: usize, replicate: usize) -> u64 {
    ((sweep as u64) << 32) | (replicate as u64 & 0xffff_ffff)
}
