//! Oversampling benchmark toolkit for imbalanced binary classification.
//!
//! The crate bundles a feature-matching conditional GAN oversampler
//! ([`gan`]), classic baselines ([`oversample`]), four downstream
//! classifiers ([`classifiers`]) and the experiment harness that ties them
//! together ([`bench`]).
//!
//! Every stochastic routine takes an explicit `u64` seed and is a pure
//! function of its inputs and that seed.

pub mod bench;
pub mod classifiers;
pub mod gan;
pub mod matrix;
pub mod nn;
pub mod oversample;
pub mod tabular;

pub use matrix::Matrix;
pub use tabular::{Dataset, ImbalanceStats, ScalerParams, TrainTestSplit};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG used throughout the crate.
pub type Rng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stable 64-bit hash of a sequence of string and integer parts.
///
/// FNV-1a over length-prefixed parts followed by a SplitMix64 finalizer.
/// Unlike `std`'s `DefaultHasher` the output is fixed across toolchains.
pub fn stable_hash(parts: &[&dyn HashPart]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for p in parts {
        let bytes = p.bytes();
        feed(&(bytes.len() as u64).to_le_bytes());
        feed(&bytes);
    }
    splitmix64(h)
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub trait HashPart {
    fn bytes(&self) -> Vec<u8>;
}

impl HashPart for str {
    fn bytes(&self) -> Vec<u8> {
        self.as_bytes().to_vec()
    }
}

impl HashPart for &str {
    fn bytes(&self) -> Vec<u8> {
        self.as_bytes().to_vec()
    }
}

impl HashPart for String {
    fn bytes(&self) -> Vec<u8> {
        self.as_bytes().to_vec()
    }
}

impl HashPart for u64 {
    fn bytes(&self) -> Vec<u8> {
        self.to_le_bytes().to_vec()
    }
}

impl HashPart for usize {
    fn bytes(&self) -> Vec<u8> {
        (*self as u64).to_le_bytes().to_vec()
    }
}
