//! Stable seed derivation.

use sha2::{Digest, Sha256};

/// SplitMix64 finalizer.
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Training seed for one `lambda_s` grid point. Every `lambda_0` attempt at
/// that point reuses it, so tuning always restarts from the same
/// initialization and minibatch stream.
pub fn grid_point_seed(base: u64, lambda_s: f64) -> u64 {
    // +0.0 and -0.0 map to the same seed
    let bits = if lambda_s == 0.0 { 0 } else { lambda_s.to_bits() };
    mix(base, bits)
}

/// 64-bit hash of a sequence of labelled parts, stable across platforms
/// and releases.
pub fn stable_hash(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("sha256 output has 32 bytes"))
}
