//! Sub-seed derivation.
//!
//! Every random stream in an experiment is derived from the single master
//! seed: the component label is hashed with 64-bit FNV-1a, xored into the
//! master seed, and finalized with the SplitMix64 mixer. The mapping is
//! stable across platforms and releases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the seed for `component` (e.g. `"learn/fold0/group1"`) from `master`.
pub fn derive_seed(master: u64, component: &str) -> u64 {
    splitmix64(master ^ fnv1a(component.as_bytes()))
}

/// The RNG used by every stochastic component.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
