//! Named random-stream derivation from a single experiment seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Seed for the stream `name` under `seed`. Stable across platforms and releases.
pub fn derive_seed(seed: u64, name: &str) -> u64 {
    splitmix64(seed ^ splitmix64(fnv1a(name.as_bytes())))
}

/// Seed for shard/iteration `index` of stream `name`.
pub fn derive_indexed(seed: u64, name: &str, index: u64) -> u64 {
    splitmix64(derive_seed(seed, name) ^ splitmix64(index.wrapping_add(1)))
}

pub fn stream(seed: u64, name: &str) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, name))
}

pub fn indexed_stream(seed: u64, name: &str, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_indexed(seed, name, index))
}
