//! Narrow PCG for exhaustive checks. Same construction as the 128-bit
//! generator: an LCG modulo 2^w with an XSL-RR output of w/2 bits.

use super::lcg::LcgParams;
use super::RngError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ToyGenerator {
    params: LcgParams,
    state: u128,
}

impl ToyGenerator {
    /// Full-period parameters for the supported widths.
    pub fn default_for_width(width: u32) -> Result<Self, RngError> {
        let (a, c) = match width {
            8 => (141, 77),
            16 => (0x8e25, 0x3a97),
            w => return Err(RngError::UnsupportedWidth(w)),
        };
        Self::new(width, a, c, 0)
    }

    pub fn new(width: u32, multiplier: u128, increment: u128, state: u128) -> Result<Self, RngError> {
        if width != 8 && width != 16 {
            return Err(RngError::UnsupportedWidth(width));
        }
        let params = LcgParams::with_width(multiplier, increment, width)?;
        Ok(Self {
            params,
            state: state & ((1u128 << width) - 1),
        })
    }

    pub fn width(&self) -> u32 {
        self.params.bits()
    }

    pub fn params(&self) -> &LcgParams {
        &self.params
    }

    pub fn state(&self) -> u128 {
        self.state
    }

    pub fn set_state(&mut self, state: u128) {
        self.state = state & ((1u128 << self.width()) - 1);
    }

    /// XSL-RR at width w: fold the w/2-bit halves, rotate by the top log2(w/2) bits.
    pub fn output(&self, state: u128) -> u32 {
        let half = self.width() / 2;
        let half_mask = (1u32 << half) - 1;
        let hi = (state >> half) as u32 & half_mask;
        let lo = state as u32 & half_mask;
        let folded = hi ^ lo;
        let rot_bits = half.trailing_zeros();
        let rot = (state >> (self.width() - rot_bits)) as u32;
        if rot == 0 {
            folded
        } else {
            ((folded >> rot) | (folded << (half - rot))) & half_mask
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> u32 {
        self.state = self.params.advance(self.state);
        self.output(self.state)
    }

    pub fn prev(&mut self) -> u32 {
        let v = self.output(self.state);
        self.state = self.params.retreat(self.state);
        v
    }
}
