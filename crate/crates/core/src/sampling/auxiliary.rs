//! Forward-only auxiliary generator for the rare extra uniforms of an
//! accept-reject attempt.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer applied to `x`.
#[inline]
pub fn splitmix64_mix(x: u64) -> u64 {
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sequential SplitMix64 generator.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        splitmix64_mix(self.state)
    }
}

/// xoshiro256+ with its 256-bit state filled from a 64-bit seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuxGenerator {
    s: [u64; 4],
}

/// Four consecutive SplitMix64 outputs become the xoshiro256+ state.
pub fn splitmix_expand(seed: u64) -> AuxGenerator {
    let mut sm = SplitMix64::new(seed);
    let mut s = [sm.next_u64(), sm.next_u64(), sm.next_u64(), sm.next_u64()];
    if s == [0; 4] {
        s[0] = GOLDEN_GAMMA;
    }
    AuxGenerator { s }
}

impl AuxGenerator {
    pub fn state(&self) -> [u64; 4] {
        self.s
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0].wrapping_add(self.s[3]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) from the top 53 bits.
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        super::u64_to_unit_f64(self.next_u64())
    }
}
