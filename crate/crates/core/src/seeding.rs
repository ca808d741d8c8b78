//! Seed derivation for reproducible, order-independent random streams.
//!
//! Every random decision in the crate is drawn from a `ChaCha8Rng` whose seed
//! is derived from the caller's seed mixed with a stream identifier (a sample
//! index, a batch index, a purpose tag). Two streams with different
//! identifiers are independent, so work can be split across threads without
//! changing any output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer applied to `seed ^ stream`-style combination.
pub fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit identifier of a string (first 8 bytes of its SHA-256).
pub fn tag(s: &str) -> u64 {
    let digest = Sha256::digest(s.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn stream(seed: u64, stream_id: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(mix(seed, stream_id))
}

pub fn tagged_stream(seed: u64, purpose: &str) -> StreamRng {
    stream(seed, tag(purpose))
}

/// Lowercase hex SHA-256 of arbitrary bytes, used for artifact fingerprints.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
