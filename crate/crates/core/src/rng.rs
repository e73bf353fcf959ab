//! Counter-based random numbers.
//!
//! Every draw is a pure function of `(seed, stream, plane, index)`, so planes can be
//! generated in any order or in parallel and still produce bit-identical output on
//! every platform. The mixer is the SplitMix64 finalizer applied in two rounds.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream identifiers so independent consumers of one seed never share draws.
pub mod stream {
    pub const PHOTONS: u64 = 0x5048_4f54;
    pub const MASKS: u64 = 0x4d41_534b;
    pub const CODES: u64 = 0x434f_4445;
    pub const SCENES: u64 = 0x5343_454e;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            key: splitmix64(seed ^ splitmix64(stream)),
        }
    }

    #[inline]
    pub fn bits(&self, plane: u64, index: u64) -> u64 {
        let plane_key = splitmix64(self.key ^ plane.wrapping_mul(GOLDEN_GAMMA));
        splitmix64(plane_key ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
    }

    /// Uniform draw in `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn uniform(&self, plane: u64, index: u64) -> f64 {
        (self.bits(plane, index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (Lemire's multiply-shift; bias below 2^-32 for small n).
    #[inline]
    pub fn below(&self, plane: u64, index: u64, n: u32) -> u32 {
        let hi = (self.bits(plane, index) >> 32) * n as u64;
        (hi >> 32) as u32
    }
}
