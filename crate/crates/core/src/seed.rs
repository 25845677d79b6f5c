//! Counter-based seed derivation.
//!
//! Every random stream in a run is keyed by `(master, stream, counter)` and
//! hashed with SplitMix64 finalizers, so a stream never depends on how many
//! values another stream consumed or on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Values are part of the persisted-run contract; never reuse one.
pub mod stream {
    /// Monte-Carlo pool for adaptive iteration `counter`.
    pub const POOL: u64 = 1;
    /// Output noise for evaluation number `counter`.
    pub const NOISE: u64 = 2;
    /// Latin hypercube initial design.
    pub const LATIN_HYPERCUBE: u64 = 3;
    /// Shard `counter` of a noise-sum simulation.
    pub const NOISE_SIMULATION: u64 = 4;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed, a stream tag and a counter.
pub fn derive_seed(master: u64, stream: u64, counter: u64) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ stream.rotate_left(17));
    splitmix64(b ^ counter.rotate_left(41))
}

/// Generator for the given derived stream.
pub fn stream_rng(master: u64, stream: u64, counter: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, counter))
}
