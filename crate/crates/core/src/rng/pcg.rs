//! Reversible PCG-XSL-RR 128/64.
//!
//! `next_u64` follows the reference generator exactly (advance, then permute
//! the new state), so its output stream is bit-identical to the published
//! `pcg64` vectors. `prev_u64` permutes the current state and then steps the
//! LCG backwards with the inverse multiplier: it returns the value the most
//! recent `next_u64` produced and leaves the generator where it was before that
//! call.

use super::lcg::{LcgParams, PCG_DEFAULT_MULTIPLIER_128, PCG_DEFAULT_MULTIPLIER_128_INV};
use super::{Direction, ReversibleBits};

/// Selects one of 2^64 increments: `c = (selector << 1) | 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StreamId(pub u64);

impl StreamId {
    #[inline]
    pub fn increment(self) -> u128 {
        ((self.0 as u128) << 1) | 1
    }
}

/// XSL-RR output permutation: xor-fold the halves, rotate by the top 6 bits.
#[inline]
pub fn output_permutation(state: u128) -> u64 {
    let folded = ((state >> 64) as u64) ^ (state as u64);
    folded.rotate_right((state >> 122) as u32)
}

/// State of one reversible generator. The multiplier is fixed to the reference
/// default; only the increment varies between streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GeneratorState {
    state: u128,
    increment: u128,
    /// `-c a^-1`, so a backward step is `s a^-1 + offset`, the same
    /// multiply-add shape as a forward step.
    retreat_offset: u128,
}

#[inline]
fn retreat_offset(increment: u128) -> u128 {
    increment.wrapping_mul(PCG_DEFAULT_MULTIPLIER_128_INV).wrapping_neg()
}

impl GeneratorState {
    /// Reference seeding: zero state, install the increment, advance, add
    /// `init_state`, advance.
    pub fn seed(init_state: u128, stream: StreamId) -> Self {
        let mut g = Self::from_parts(0, stream.increment());
        g.advance();
        g.state = g.state.wrapping_add(init_state);
        g.advance();
        g
    }

    /// Builds a generator from a raw state and an odd increment.
    pub fn from_parts(state: u128, increment: u128) -> Self {
        debug_assert!(increment & 1 == 1, "increment must be odd");
        let increment = increment | 1;
        Self {
            state,
            increment,
            retreat_offset: retreat_offset(increment),
        }
    }

    pub fn state(&self) -> u128 {
        self.state
    }

    pub fn increment(&self) -> u128 {
        self.increment
    }

    pub fn params(&self) -> LcgParams {
        LcgParams::new(PCG_DEFAULT_MULTIPLIER_128, self.increment)
            .expect("default multiplier and odd increment are valid")
    }

    #[inline]
    fn advance(&mut self) {
        self.state = self
            .state
            .wrapping_mul(PCG_DEFAULT_MULTIPLIER_128)
            .wrapping_add(self.increment);
    }

    #[inline]
    fn retreat(&mut self) {
        self.state = self
            .state
            .wrapping_mul(PCG_DEFAULT_MULTIPLIER_128_INV)
            .wrapping_add(self.retreat_offset);
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.advance();
        output_permutation(self.state)
    }

    #[inline]
    pub fn prev_u64(&mut self) -> u64 {
        let value = output_permutation(self.state);
        self.retreat();
        value
    }

    #[inline]
    pub fn draw(&mut self, dir: Direction) -> u64 {
        match dir {
            Direction::Forward => self.next_u64(),
            Direction::Reverse => self.prev_u64(),
        }
    }
}

impl ReversibleBits for GeneratorState {
    #[inline]
    fn next_u64(&mut self) -> u64 {
        GeneratorState::next_u64(self)
    }

    #[inline]
    fn prev_u64(&mut self) -> u64 {
        GeneratorState::prev_u64(self)
    }
}
