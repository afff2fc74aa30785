//! Stateless seed derivation for replications and random streams.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const STREAM: u64 = 0xd1b5_4a32_d192_ed03;

/// SplitMix64 finaliser; a bijection on u64 with full avalanche.
#[inline]
pub fn fmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines a key with a counter.
#[inline]
pub fn mix(key: u64, counter: u64) -> u64 {
    fmix(fmix(key.wrapping_add(GOLDEN)) ^ counter.wrapping_mul(GOLDEN))
}

/// Seed for replication `replicate` of random stream `stream_tag`.
pub fn derive_seed(master: u64, replicate: u64, stream_tag: u64) -> u64 {
    fmix(mix(master, replicate) ^ fmix(stream_tag.wrapping_mul(STREAM).wrapping_add(1)))
}
