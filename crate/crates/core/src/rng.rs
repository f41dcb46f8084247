//! Deterministic random streams.
//!
//! Every independent unit of work owns a ChaCha stream keyed by the master
//! seed and a packed [`StreamKey`]; results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    GroundTruth = 0,
    Noise = 1,
    Chain = 2,
    Reference = 3,
    PriorSamples = 4,
    Test = 15,
}

/// Identifies one random stream below a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub purpose: Purpose,
    pub replicate: u32,
    pub level: u32,
    pub qoi_level: u32,
    /// Which chain of a correction block: 0 targets level ℓ, 1 targets ℓ−1.
    pub target: u32,
}

impl StreamKey {
    pub fn new(purpose: Purpose) -> Self {
        StreamKey { purpose, replicate: 0, level: 0, qoi_level: 0, target: 0 }
    }

    pub fn replicate(mut self, r: u32) -> Self {
        self.replicate = r;
        self
    }

    pub fn block(mut self, level: u32, qoi_level: u32, target: u32) -> Self {
        self.level = level;
        self.qoi_level = qoi_level;
        self.target = target;
        self
    }

    /// Packs into 64 bits: purpose 4 | target 4 | qoi level 8 | level 8 | replicate 40.
    /// Injective while every field stays within its width.
    pub fn packed(&self) -> u64 {
        assert!(self.target < 16 && self.level < 256 && self.qoi_level < 256 && (self.replicate as u64) < (1 << 40));
        ((self.purpose as u64) << 60)
            | ((self.target as u64) << 56)
            | ((self.qoi_level as u64) << 48)
            | ((self.level as u64) << 40)
            | self.replicate as u64
    }
}

pub fn stream(master_seed: u64, key: StreamKey) -> StreamRng {
    let mut rng = StreamRng::seed_from_u64(master_seed);
    rng.set_stream(key.packed());
    rng
}
