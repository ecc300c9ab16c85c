//! Ziggurat sampler for the standard normal distribution.
//!
//! Layer `z` (0 at the peak) is the rectangle `[-edge[z+1], edge[z+1]] x
//! (height[z+1], height[z]]`. The last layer, `Z-1`, is the base strip plus the
//! tail beyond `edge[Z-1] = r`; `edge[Z]` is its virtual width `v / f(r)`. All
//! layers have the same area `v` (one side of the axis).
//!
//! A primary draw `zeta` is split as: bits 0..log2(Z) pick the layer, bit 7
//! is the sign, bits 11..63 are the 53-bit magnitude. Acceptance depends on
//! `zeta` alone; any extra uniforms come from an auxiliary generator seeded
//! with `zeta`, so the decision can be replayed from either direction.

use std::sync::OnceLock;

use super::auxiliary::{splitmix_expand, AuxGenerator};
use super::{u64_to_unit_f64, SamplingError};

pub const DEFAULT_LAYERS: usize = 128;
const SIGN_BIT: u64 = 1 << 7;
const MAX_LAYERS: usize = 128;

#[inline]
fn density(x: f64) -> f64 {
    (-0.5 * x * x).exp()
}

/// Smallest `m < 2^53` with `m 2^-53 outer >= inner` in floating point, or
/// `2^53` if none. The product is monotone in `m`, so bisection is exact.
fn fast_limit(inner: f64, outer: f64) -> u64 {
    let passes = |m: u64| u64_to_unit_f64(m << 11) * outer < inner;
    let (mut lo, mut hi) = (0u64, 1u64 << 53);
    if !passes(0) {
        return 0;
    }
    // Invariant: passes(lo), and hi fails or is 2^53.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if passes(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Unnormalized tail mass `int_r^inf exp(-x^2/2) dx`.
fn tail_mass(r: f64) -> f64 {
    (std::f64::consts::PI / 2.0).sqrt() * libm::erfc(r / std::f64::consts::SQRT_2)
}

#[derive(Clone, Debug)]
pub struct ZigguratTable {
    layers: usize,
    edges: Vec<f64>,
    heights: Vec<f64>,
    tail_start: f64,
    area: f64,
    /// `fast_limits[z]`: the first 53-bit magnitude that fails the fast test
    /// `|u edge[z+1]| < edge[z]` in layer `z`, so the test is one integer compare.
    fast_limits: Vec<u64>,
}

/// Result of a single attempt with one primary draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AttemptOutcome {
    Accept(f64),
    Reject,
}

struct Stack {
    edges: Vec<f64>,
    heights: Vec<f64>,
    area: f64,
}

/// Stacks layers upwards from a trial `r`. Returns the height reached above
/// layer 0 (1 when `r` is exact) or `None` if the stack overshoots the peak.
fn stack_layers(layers: usize, r: f64) -> (f64, Option<Stack>) {
    let fr = density(r);
    let area = r * fr + tail_mass(r);
    let mut edges = vec![0.0; layers + 1];
    let mut heights = vec![0.0; layers + 1];
    edges[layers - 1] = r;
    heights[layers - 1] = fr;
    edges[layers] = area / fr;
    for z in (1..layers - 1).rev() {
        let h = heights[z + 1] + area / edges[z + 1];
        if h >= 1.0 {
            return (h + 1.0, None);
        }
        heights[z] = h;
        edges[z] = (-2.0 * h.ln()).sqrt();
    }
    let top = heights[1] + area / edges[1];
    (top, Some(Stack { edges, heights, area }))
}

impl ZigguratTable {
    /// Solves for the tail start `r` by bisection on the closure condition
    /// (the topmost layer ends exactly at the peak height 1).
    pub fn build(layers: usize) -> Result<Self, SamplingError> {
        if !(8..=MAX_LAYERS).contains(&layers) || !layers.is_power_of_two() {
            return Err(SamplingError::InvalidLayerCount(layers));
        }
        let (mut lo, mut hi) = (0.5f64, 12.0f64);
        if stack_layers(layers, lo).0 <= 1.0 || stack_layers(layers, hi).0 >= 1.0 {
            return Err(SamplingError::TableDidNotConverge { layers });
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if stack_layers(layers, mid).0 > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Adjacent floats now bracket the root; keep the closer one.
        let miss = |r: f64| match stack_layers(layers, r) {
            (top, Some(_)) => (top - 1.0).abs(),
            _ => f64::INFINITY,
        };
        let r = if miss(lo) < miss(hi) { lo } else { hi };
        let (top, stack) = stack_layers(layers, r);
        let stack = stack.ok_or(SamplingError::TableDidNotConverge { layers })?;
        if (top - 1.0).abs() > 1e-9 {
            return Err(SamplingError::TableDidNotConverge { layers });
        }
        let Stack {
            mut edges,
            mut heights,
            area,
        } = stack;
        edges[0] = 0.0;
        heights[0] = 1.0;
        heights[layers] = 0.0;
        let fast_limits = (0..layers).map(|z| fast_limit(edges[z], edges[z + 1])).collect();
        Ok(Self {
            layers,
            edges,
            heights,
            tail_start: r,
            area,
            fast_limits,
        })
    }

    /// Process-wide 128-layer table.
    pub fn standard() -> &'static ZigguratTable {
        static TABLE: OnceLock<ZigguratTable> = OnceLock::new();
        TABLE.get_or_init(|| Self::build(DEFAULT_LAYERS).expect("128-layer table converges"))
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn tail_start(&self) -> f64 {
        self.tail_start
    }

    pub fn common_area(&self) -> f64 {
        self.area
    }

    /// One-sided area of each layer, base strip and tail included for the last.
    pub fn layer_areas(&self) -> Vec<f64> {
        let z_last = self.layers - 1;
        (0..self.layers)
            .map(|z| {
                if z == z_last {
                    self.tail_start * self.heights[z_last] + tail_mass(self.tail_start)
                } else {
                    self.edges[z + 1] * (self.heights[z] - self.heights[z + 1])
                }
            })
            .collect()
    }

    #[inline]
    fn split(&self, zeta: u64) -> (usize, f64) {
        let z = (zeta as usize) & (self.layers - 1);
        let u = u64_to_unit_f64(zeta);
        // Copy the sign bit straight into the float; a branch here mispredicts half the time.
        let mag = f64::from_bits(u.to_bits() | ((zeta & SIGN_BIT) << (63 - SIGN_BIT.trailing_zeros())));
        (z, mag)
    }

    /// The immediate-accept branch: `Some(sample)` when no auxiliary draw is
    /// needed. For the base layer `edge[Z-1]` is `r`, so one test covers both.
    #[inline]
    pub fn fast_path(&self, zeta: u64) -> Option<f64> {
        let z = (zeta as usize) & (self.layers - 1);
        if (zeta >> 11) < self.fast_limits[z] {
            let (_, signed_u) = self.split(zeta);
            Some(signed_u * self.edges[z + 1])
        } else {
            None
        }
    }

    /// Full acceptance decision for one primary draw. Pure in `zeta`.
    #[inline]
    pub fn attempt(&self, zeta: u64) -> AttemptOutcome {
        if let Some(x) = self.fast_path(zeta) {
            return AttemptOutcome::Accept(x);
        }
        self.slow_path(zeta)
    }

    #[cold]
    fn slow_path(&self, zeta: u64) -> AttemptOutcome {
        let (z, signed_u) = self.split(zeta);
        let mut aux = splitmix_expand(zeta);
        if z == self.layers - 1 {
            let sign = if signed_u < 0.0 { -1.0 } else { 1.0 };
            return AttemptOutcome::Accept(marsaglia_tail(&mut aux, self.tail_start, sign));
        }
        let phi = signed_u * self.edges[z + 1];
        let (h_lo, h_hi) = (self.heights[z + 1], self.heights[z]);
        let psi = h_lo + (h_hi - h_lo) * aux.next_unit();
        if psi < density(phi) {
            AttemptOutcome::Accept(phi)
        } else {
            AttemptOutcome::Reject
        }
    }

    /// Probability that one attempt is accepted at all: the area under the
    /// half Gaussian over the total area of the layers.
    pub fn acceptance_probability(&self) -> f64 {
        (std::f64::consts::PI / 2.0).sqrt() / (self.layers as f64 * self.area)
    }

    /// Fraction of all 2^64 draws that take the fast path.
    pub fn fast_path_probability(&self) -> f64 {
        let z_last = self.layers - 1;
        let interior: f64 = (0..z_last).map(|z| self.edges[z] / self.edges[z + 1]).sum();
        (interior + self.tail_start / self.edges[self.layers]) / self.layers as f64
    }
}

/// One proposal of the tail method: `Some(x)` (x >= 0, the excess over `r`)
/// when `2y > x^2` with `x = -ln(u1)/r`, `y = -ln(u2)`.
#[inline]
pub fn tail_candidate(u1: f64, u2: f64, r: f64) -> Option<f64> {
    let x = -u1.ln() / r;
    let y = -u2.ln();
    if 2.0 * y > x * x {
        Some(x)
    } else {
        None
    }
}

/// Samples `|X| > r` for a standard normal `X`, returned with `sign`.
pub fn marsaglia_tail(aux: &mut AuxGenerator, r: f64, sign: f64) -> f64 {
    loop {
        let u1 = aux.next_unit();
        let u2 = aux.next_unit();
        if let Some(x) = tail_candidate(u1, u2, r) {
            return sign * (r + x);
        }
    }
}
