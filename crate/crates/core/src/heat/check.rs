//! Directional finite-difference check of the adjoint gradient.

use super::adjoint::{compute_gradient, GradientOptions};
use super::config::SimConfig;
use super::forward::{run_forward, PathCapture};
use super::{Control, HeatError};
use crate::rng::{Direction, GeneratorState, StreamId};
use crate::sampling::sample_normal;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionalCheck {
    /// `g . d` from the adjoint gradient.
    pub adjoint: f64,
    /// `(J(u + h d) - J(u - h d)) / 2h` with the same seed.
    pub finite_difference: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdReport {
    pub checks: Vec<DirectionalCheck>,
    pub max_relative_error: f64,
}

/// Standard normal direction vectors, reproducible from `seed`.
pub fn random_directions(cells: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut g = GeneratorState::seed(seed as u128, StreamId(0xd1ec));
    (0..count)
        .map(|_| (0..cells).map(|_| sample_normal(&mut g, Direction::Forward)).collect())
        .collect()
}

/// Compares `g . d` against central differences of the frozen-seed objective
/// along `directions` random directions.
pub fn finite_difference_check<T: Real>(
    cfg: &SimConfig<T>,
    control: &Control<T>,
    options: &GradientOptions,
    directions: usize,
    h: f64,
    direction_seed: u64,
) -> Result<FdReport, HeatError> {
    let report = compute_gradient(cfg, control, options)?;
    let mut checks = Vec::with_capacity(directions);
    for d in random_directions(control.len(), directions, direction_seed) {
        let shifted = |s: f64| -> Result<f64, HeatError> {
            let v = control
                .values()
                .iter()
                .zip(&d)
                .map(|(&u, &di)| u + T::of(s * di))
                .collect();
            Ok(run_forward(cfg, &Control::new(v), PathCapture::Discard)?
                .objective
                .to_f64_lossy())
        };
        let fd = (shifted(h)? - shifted(-h)?) / (2.0 * h);
        let ad: f64 = report
            .gradient
            .iter()
            .zip(&d)
            .map(|(g, di)| g.to_f64_lossy() * di)
            .sum();
        checks.push(DirectionalCheck {
            adjoint: ad,
            finite_difference: fd,
            relative_error: (fd - ad).abs() / ad.abs().max(f64::MIN_POSITIVE),
        });
    }
    let max_relative_error = checks.iter().map(|c| c.relative_error).fold(0.0, f64::max);
    Ok(FdReport {
        checks,
        max_relative_error,
    })
}
