//! Splittable seed derivation.
//!
//! Every stochastic step in the crate draws from its own random stream keyed
//! by `(root seed, operation tag, index)`. Streams are therefore independent
//! of the order in which work items run, which keeps parallel and sequential
//! execution byte-identical.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `(root, tag, index)`.
///
/// Not cryptographic; splitmix64 over the FNV-hashed tag gives enough
/// avalanche that distinct (tag, index) pairs never collide in practice.
pub fn derive(root: u64, tag: &str, index: u64) -> u64 {
    let mut state = root;
    let a = splitmix64(&mut state);
    state = a ^ fnv1a(tag.as_bytes());
    let b = splitmix64(&mut state);
    state = b ^ index;
    splitmix64(&mut state)
}

/// An independent ChaCha8 stream for `(root, tag, index)`.
pub fn rng(root: u64, tag: &str, index: u64) -> ChaCha8Rng {
    let mut state = derive(root, tag, index);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
