//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by
//! `(master seed, replica index, purpose)`. ChaCha is counter based, so
//! streams with different keys are independent and any replica can be
//! regenerated on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    InitialState = 1,
    Dynamics = 2,
    Arrows = 3,
    Percolation = 4,
    Bootstrap = 5,
    Sampler = 6,
}

/// Key of an independent random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub replica: u64,
    pub purpose: Purpose,
}

impl StreamKey {
    pub fn new(seed: u64, replica: u64, purpose: Purpose) -> Self {
        StreamKey {
            seed,
            replica,
            purpose,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&splitmix(self.seed).to_le_bytes());
        key[8..16].copy_from_slice(&splitmix(self.seed ^ 0x9e37_79b9_7f4a_7c15).to_le_bytes());
        key[16..24].copy_from_slice(&(self.purpose as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.replica);
        rng
    }
}

/// Stream for `(seed, replica, purpose)`.
pub fn stream(seed: u64, replica: u64, purpose: Purpose) -> ChaCha8Rng {
    StreamKey::new(seed, replica, purpose).rng()
}

/// Derives a child seed, e.g. one per grid point of a study.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix(seed.wrapping_add(splitmix(index.wrapping_add(0x5851_f42d_4c95_7f2d))))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
