//! Linear congruential recurrences modulo a power of two, in both directions.

use super::RngError;

/// Multiplier of the reference 128-bit PCG generators.
pub const PCG_DEFAULT_MULTIPLIER_128: u128 = 0x2360_ED05_1FC6_5DA4_4385_DF64_9FCC_F645;

/// Inverse of [`PCG_DEFAULT_MULTIPLIER_128`] modulo 2^128.
pub const PCG_DEFAULT_MULTIPLIER_128_INV: u128 = inverse_u128(PCG_DEFAULT_MULTIPLIER_128);

#[inline]
const fn mask(bits: u32) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    }
}

/// Newton/Hensel lifting for an odd `a` modulo 2^128.
///
/// `x = a` is already an inverse modulo 8, and each step `x <- x (2 - a x)`
/// doubles the number of correct low bits: 3, 6, 12, 24, 48, 96, 192.
const fn inverse_u128(a: u128) -> u128 {
    let mut x = a;
    let mut i = 0;
    while i < 6 {
        x = x.wrapping_mul(2u128.wrapping_sub(a.wrapping_mul(x)));
        i += 1;
    }
    x
}

/// Multiplicative inverse of `a` modulo 2^`bits`.
///
/// Only odd values are invertible. `bits` must lie in `1..=128`; the input is
/// reduced modulo 2^`bits` first.
pub fn modular_inverse(a: u128, bits: u32) -> Result<u128, RngError> {
    if bits == 0 || bits > 128 {
        return Err(RngError::UnsupportedWidth(bits));
    }
    let m = mask(bits);
    let a = a & m;
    if a & 1 == 0 {
        return Err(RngError::NotInvertible(a));
    }
    Ok(inverse_u128(a) & m)
}

/// Parameters of `state <- a * state + c (mod 2^bits)` plus the precomputed
/// inverse multiplier used to step backwards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LcgParams {
    multiplier: u128,
    increment: u128,
    inverse_multiplier: u128,
    bits: u32,
}

impl LcgParams {
    /// Full-width (2^128) parameters.
    pub fn new(multiplier: u128, increment: u128) -> Result<Self, RngError> {
        Self::with_width(multiplier, increment, 128)
    }

    pub fn with_width(multiplier: u128, increment: u128, bits: u32) -> Result<Self, RngError> {
        let inverse_multiplier = modular_inverse(multiplier, bits)?;
        let m = mask(bits);
        let increment = increment & m;
        if increment & 1 == 0 {
            return Err(RngError::EvenIncrement(increment));
        }
        Ok(Self {
            multiplier: multiplier & m,
            increment,
            inverse_multiplier,
            bits,
        })
    }

    pub fn multiplier(&self) -> u128 {
        self.multiplier
    }

    pub fn increment(&self) -> u128 {
        self.increment
    }

    pub fn inverse_multiplier(&self) -> u128 {
        self.inverse_multiplier
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Hull-Dobell for a power-of-two modulus: c odd and a = 1 (mod 4).
    pub fn has_full_period(&self) -> bool {
        self.increment & 1 == 1 && (self.bits < 2 || self.multiplier & 3 == 1)
    }

    #[inline]
    pub fn advance(&self, state: u128) -> u128 {
        state.wrapping_mul(self.multiplier).wrapping_add(self.increment) & mask(self.bits)
    }

    #[inline]
    pub fn retreat(&self, state: u128) -> u128 {
        state
            .wrapping_sub(self.increment)
            .wrapping_mul(self.inverse_multiplier)
            & mask(self.bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_one_is_one() {
        assert_eq!(modular_inverse(1, 8).unwrap(), 1);
    }

    #[test]
    fn inverse_of_five_mod_256() {
        assert_eq!(modular_inverse(5, 8).unwrap(), 205);
    }

    #[test]
    fn default_multiplier_inverse_satisfies_product_identity() {
        assert_eq!(
            PCG_DEFAULT_MULTIPLIER_128.wrapping_mul(PCG_DEFAULT_MULTIPLIER_128_INV),
            1
        );
        assert_eq!(
            modular_inverse(PCG_DEFAULT_MULTIPLIER_128, 128).unwrap(),
            PCG_DEFAULT_MULTIPLIER_128_INV
        );
    }

    #[test]
    fn even_values_have_no_inverse() {
        assert_eq!(modular_inverse(6, 16), Err(RngError::NotInvertible(6)));
        assert!(LcgParams::new(4, 1).is_err());
        assert_eq!(LcgParams::new(5, 2), Err(RngError::EvenIncrement(2)));
    }

    #[test]
    fn width_is_validated() {
        assert_eq!(modular_inverse(3, 0), Err(RngError::UnsupportedWidth(0)));
        assert_eq!(modular_inverse(3, 129), Err(RngError::UnsupportedWidth(129)));
    }

    #[test]
    fn exhaustive_inverse_at_small_widths() {
        for bits in [8u32, 16] {
            let m = 1u128 << bits;
            for a in (1..m).step_by(2) {
                let x = modular_inverse(a, bits).unwrap();
                assert!(x < m);
                assert_eq!((a * x) % m, 1, "a={a} bits={bits}");
            }
        }
    }

    #[test]
    fn retreat_inverts_advance() {
        let p = LcgParams::new(PCG_DEFAULT_MULTIPLIER_128, 0xda3e_39cb_94b9_5bdb).unwrap();
        let s = 0x0123_4567_89ab_cdef_fedc_ba98_7654_3210u128;
        assert_eq!(p.retreat(p.advance(s)), s);
        assert_eq!(p.advance(p.retreat(s)), s);
    }
}
