//! Seeded randomness, split into independent named streams.
//!
//! Every randomized stage draws from its own stream derived from the master
//! seed and a stage name, so how much one stage consumes can never shift the
//! values another stage sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derive a stream seed from the master seed and a stage name.
///
/// FNV-1a over the name, XOR-folded into the master seed, finished with a
/// SplitMix64 avalanche so nearby master seeds yield unrelated streams.
pub fn derive_seed(master: u64, name: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in name.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(master ^ hash)
}

/// RNG for the named stream of the given master seed.
pub fn named_stream(master: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, name))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
