//! Counter-based seed derivation.
//!
//! Every random draw in a simulation is keyed by `(master seed, trial index,
//! stream)`, so results do not depend on scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Finalizer from SplitMix64.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines a parent seed with a child index into a new seed.
#[inline]
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix64(parent ^ mix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Independent random streams used within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    TxData = 1,
    TxPhaseNoise = 2,
    RxPhaseNoise = 3,
    RxPhaseNoiseOrd = 4,
    AuxNoise = 5,
    OrdNoise = 6,
    SiChannel = 7,
    SoiChannel = 8,
    SoiData = 9,
    Misc = 10,
}

/// Seed bundle for a single Monte Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    base: u64,
}

impl TrialSeeds {
    pub fn new(master: u64, trial: u64) -> Self {
        Self {
            base: derive_seed(master, trial),
        }
    }

    pub fn from_base(base: u64) -> Self {
        Self { base }
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn seed(&self, stream: Stream) -> u64 {
        derive_seed(self.base, stream as u64)
    }

    /// Seed for a numbered sub-stream, e.g. one per frame.
    pub fn sub_seed(&self, stream: Stream, index: u64) -> u64 {
        derive_seed(self.seed(stream), index)
    }

    pub fn rng(&self, stream: Stream) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed(stream))
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
