//! Seeded random streams. One user seed fans out into independent ChaCha
//! streams, one per purpose, so changing how many draws one consumer makes
//! never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// BK/FQ/FH pivot selection.
    Pivots = 1,
    /// VP best-spread candidates and samples.
    Vantage = 2,
    /// MVP first vantage point at each node.
    MultiVantage = 3,
    /// Benchmark query sampling.
    Queries = 4,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
