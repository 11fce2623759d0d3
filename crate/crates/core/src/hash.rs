//! Stable, platform-independent hashing used for seed derivation and
//! training fingerprints. Not cryptographic.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over bytes.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Order-sensitive fingerprint of an index list combined with a seed.
pub fn fingerprint(indices: &[usize], seed: u64) -> u64 {
    let mut h = mix64(seed ^ FNV_OFFSET);
    for &i in indices {
        h = mix64(h ^ (i as u64));
    }
    mix64(h ^ indices.len() as u64)
}
