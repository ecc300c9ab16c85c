//! Invertible permuted congruential generators.

mod lcg;
mod pcg;
mod toy;

pub use lcg::{modular_inverse, LcgParams, PCG_DEFAULT_MULTIPLIER_128, PCG_DEFAULT_MULTIPLIER_128_INV};
pub use pcg::{output_permutation, GeneratorState, StreamId};
pub use toy::ToyGenerator;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RngError {
    #[error("{0} is even and has no inverse modulo a power of two")]
    NotInvertible(u128),
    #[error("increment {0} is even")]
    EvenIncrement(u128),
    #[error("unsupported bit width {0}")]
    UnsupportedWidth(u32),
}

/// Which way a draw walks the generator's sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Forward => Direction::Reverse,
            Direction::Reverse => Direction::Forward,
        }
    }
}

/// A 64-bit source that can step both ways through its sequence.
pub trait ReversibleBits {
    fn next_u64(&mut self) -> u64;
    fn prev_u64(&mut self) -> u64;

    #[inline]
    fn draw(&mut self, dir: Direction) -> u64 {
        match dir {
            Direction::Forward => self.next_u64(),
            Direction::Reverse => self.prev_u64(),
        }
    }
}

impl<R: ReversibleBits + ?Sized> ReversibleBits for &mut R {
    #[inline]
    fn next_u64(&mut self) -> u64 {
        (**self).next_u64()
    }

    #[inline]
    fn prev_u64(&mut self) -> u64 {
        (**self).prev_u64()
    }
}
