//! Small deterministic helpers shared across modules.
//!
//! Seed derivation must be stable across builds and platforms, so the
//! hashing here is spelled out explicitly instead of going through
//! `std::collections::hash_map::DefaultHasher` (whose output is not
//! guaranteed to stay fixed between releases).

/// FNV-1a over raw bytes. Stable, endian-independent.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 finalizer; decorrelates nearby inputs.
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with string and integer context into a new seed.
pub(crate) fn derive_seed(base: u64, label: &str, extra: u64) -> u64 {
    splitmix64(base ^ fnv1a64(label.as_bytes()).rotate_left(17) ^ extra.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Affine grid assignment shared by the cognitive map and histogram
/// binning: `floor((v - min) / (max - min) * n)` with the exact upper
/// boundary clamped down to `n - 1`.
///
/// Requires `max > min` and `n >= 1`; values outside `[min, max]` are
/// clamped into range.
pub(crate) fn grid_index(v: f64, min: f64, max: f64, n: usize) -> usize {
    debug_assert!(max > min && n >= 1);
    let t = (v - min) / (max - min);
    let i = (t * n as f64).floor();
    if i < 0.0 {
        0
    } else {
        (i as usize).min(n - 1)
    }
}

/// Rounds to the nearest multiple of `step` (e.g. 0.1 cm, 0.01 m).
pub(crate) fn round_to(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}
