//! Seed derivation. Every random stream in the crate is derived from a
//! single 64-bit root seed, either by a purpose string or by a worker index.

/// Default root seed used when none is supplied.
pub const DEFAULT_SEED: u64 = 0x5eed_0d15_7000_0001;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the purpose string; stable across platforms and releases.
fn stream_id(purpose: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in purpose.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Seed for the named stream `purpose` under `seed`.
pub fn derive(seed: u64, purpose: &str) -> u64 {
    mix64(seed ^ mix64(stream_id(purpose)))
}

/// Seed for worker/trial `index` under `seed`.
pub fn child(seed: u64, index: u64) -> u64 {
    mix64(seed.rotate_left(17) ^ mix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}
