//! Floating-point scalar abstraction used by the particle solver.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the heat solver is generic over: `f32` or `f64`.
///
/// Random draws are always produced in `f64` (the 53-bit conversion is part of
/// the bit-level reversibility contract) and converted with [`Real::from_f64`].
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`. Never fails for finite input.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64 converts")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        // Signed conversion is a single instruction; exact below 2^53.
        Self::of(n as i64 as f64)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn half() -> Self {
        Self::of(0.5)
    }
}

impl Real for f32 {}
impl Real for f64 {}
