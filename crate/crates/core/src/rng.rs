//! Seeded RNG streams.
//!
//! Every randomized routine takes a `(master seed, stream index)` pair and
//! derives an independent ChaCha8 stream from it, so concurrent trials are
//! order-independent and runs are reproducible bit-for-bit.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step, used to decorrelate stream indices before handing them
/// to ChaCha's stream selector.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// RNG for a derived stream: same master seed, decorrelated stream id.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(mix64(stream));
    rng
}

/// Collapse an arbitrary tag tuple into a stream id.
pub fn stream_id(parts: &[u64]) -> u64 {
    let mut acc = 0x243F_6A88_85A3_08D3u64;
    for &p in parts {
        acc = mix64(acc ^ p);
    }
    acc
}
