//! Seed derivation and the counter-based bit generator.
//!
//! Every random quantity in the pipeline is drawn from a ChaCha8 stream
//! (`rand_chacha::ChaCha8Rng`) keyed by a 64-bit seed and a 64-bit stream id.
//! The seed is expanded to the 256-bit ChaCha key with `SeedableRng::seed_from_u64`
//! (PCG32 expansion); the stream id selects the ChaCha nonce. Sub-seeds are
//! derived from a master seed with the SplitMix64 finaliser, so results never
//! depend on evaluation order or thread scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and an ordered list of tags.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(mix64(master), |acc, &t| mix64(acc ^ mix64(t)))
}

/// ChaCha8 generator positioned at the start of `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` pseudo-random bits (each 0 or 1) for `(master_seed, stream_id)`.
///
/// Bits are taken from successive 64-bit words, least significant bit first.
pub fn prng_bits(master_seed: u64, stream_id: u64, n: usize) -> Vec<u8> {
    let mut rng = stream_rng(master_seed, stream_id);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let word = rng.next_u64();
        let take = (n - out.len()).min(64);
        out.extend((0..take).map(|b| ((word >> b) & 1) as u8));
    }
    out
}
