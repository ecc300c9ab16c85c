//! Direction-agnostic distribution sampling over a reversible bit stream.
//!
//! Every sampler draws its primary 64-bit values through
//! [`ReversibleBits::draw`], so running the same sampler in
//! [`Direction::Reverse`] replays the forward samples in reverse order, bit for
//! bit, and leaves the generator where the forward run started.

mod auxiliary;
mod ziggurat;

pub use auxiliary::{splitmix64_mix, splitmix_expand, AuxGenerator, SplitMix64};
pub use ziggurat::{marsaglia_tail, tail_candidate, AttemptOutcome, ZigguratTable, DEFAULT_LAYERS};

pub use crate::rng::Direction;
use crate::rng::ReversibleBits;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("exponential rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("layer count {0} must be a power of two in 8..=128")]
    InvalidLayerCount(usize),
    #[error("ziggurat table for {layers} layers did not converge")]
    TableDidNotConverge { layers: usize },
}

/// `(x >> 11) * 2^-53`: exact, in [0, 1).
#[inline]
pub fn u64_to_unit_f64(x: u64) -> f64 {
    // Through i64: the value fits in 53 bits and the signed conversion is one instruction.
    ((x >> 11) as i64) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub fn sample_uniform<R: ReversibleBits + ?Sized>(rng: &mut R, dir: Direction) -> f64 {
    u64_to_unit_f64(rng.draw(dir))
}

/// Inverse-CDF transform of a uniform to Exp(rate).
#[inline]
pub fn exponential_from_unit(phi: f64, rate: f64) -> f64 {
    -(1.0 - phi).ln() / rate
}

/// Exponential sampler with a validated rate; one primary draw per sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponential {
    rate: f64,
}

impl Exponential {
    pub fn new(rate: f64) -> Result<Self, SamplingError> {
        if rate > 0.0 && rate.is_finite() {
            Ok(Self { rate })
        } else {
            Err(SamplingError::InvalidRate(rate))
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    #[inline]
    pub fn sample<R: ReversibleBits + ?Sized>(&self, rng: &mut R, dir: Direction) -> f64 {
        exponential_from_unit(sample_uniform(rng, dir), self.rate)
    }
}

pub fn sample_exponential<R: ReversibleBits + ?Sized>(
    rng: &mut R,
    dir: Direction,
    rate: f64,
) -> Result<f64, SamplingError> {
    Ok(Exponential::new(rate)?.sample(rng, dir))
}

impl ZigguratTable {
    /// Draws primary values until one is accepted.
    #[inline]
    pub fn sample<R: ReversibleBits + ?Sized>(&self, rng: &mut R, dir: Direction) -> f64 {
        loop {
            if let AttemptOutcome::Accept(x) = self.attempt(rng.draw(dir)) {
                return x;
            }
        }
    }

    /// Like [`ZigguratTable::sample`], also returning the number of primary draws used.
    pub fn sample_counted<R: ReversibleBits + ?Sized>(&self, rng: &mut R, dir: Direction) -> (f64, usize) {
        let mut draws = 0;
        loop {
            draws += 1;
            if let AttemptOutcome::Accept(x) = self.attempt(rng.draw(dir)) {
                return (x, draws);
            }
        }
    }
}

/// Standard normal sample from the shared 128-layer table.
#[inline]
pub fn sample_normal<R: ReversibleBits + ?Sized>(rng: &mut R, dir: Direction) -> f64 {
    ZigguratTable::standard().sample(rng, dir)
}

/// The three distributions exposed by the command-line tools.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distribution {
    Uniform,
    Exponential(Exponential),
    Normal,
}

impl Distribution {
    #[inline]
    pub fn sample<R: ReversibleBits + ?Sized>(&self, rng: &mut R, dir: Direction) -> f64 {
        match self {
            Distribution::Uniform => sample_uniform(rng, dir),
            Distribution::Exponential(e) => e.sample(rng, dir),
            Distribution::Normal => sample_normal(rng, dir),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Distribution::Uniform => "uniform",
            Distribution::Exponential(_) => "exponential",
            Distribution::Normal => "normal",
        }
    }
}
