//! Seed splitting.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by the
//! user's 64-bit seed, with a distinct 64-bit stream id per purpose and round.
//! Streams are independent, so adding a new consumer never shifts the draws
//! of an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags. The high 32 bits of a stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Stream {
    LatinHypercube = 1,
    MonteCarlo = 2,
    Voronoi = 3,
    FitInit = 4,
    CrossValidation = 5,
    TestSet = 6,
    SobolOracle = 7,
    Moments = 8,
    Planted = 9,
}

/// Generator for `(seed, stream, index)`. `index` distinguishes rounds or
/// repetitions within one purpose.
pub fn stream_rng(seed: u64, stream: Stream, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 32) | index as u64);
    rng
}
